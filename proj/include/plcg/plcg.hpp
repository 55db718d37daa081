#pragma once

// Deep-pipelined conjugate gradients, p(l)-CG.
//
// The auxiliary basis z_j = P_l(A) v_{j-l} runs l vectors ahead of the
// orthonormal Lanczos basis v_j. Dot products issued in iteration i are
// consumed in iteration i+l, which is where a real implementation would wait
// for the non-blocking reduction. Only a sliding window of basis vectors and
// a band of 2l+1 entries per column of the transform Z = V G are kept.

#include "plcg/shifts.hpp"
#include "plcg/sparse.hpp"
#include "plcg/trace.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

namespace plcg {

/// Ring of vectors addressed by their global index; holding index j evicts
/// index j - slots().
class VectorWindow {
public:
    VectorWindow() = default;
    VectorWindow(std::size_t slots, std::size_t n);

    std::size_t slots() const { return owner_.size(); }
    std::size_t live() const;
    bool holds(std::size_t j) const;
    /// Throws std::logic_error if j is not live.
    std::span<double> at(std::size_t j);
    std::span<const double> at(std::size_t j) const;
    /// Takes the slot for index j and returns it (contents unspecified).
    std::span<double> claim(std::size_t j);
    void clear();

private:
    std::size_t slot_of(std::size_t j) const { return j % owner_.size(); }

    std::vector<Vector> data_;
    std::vector<long long> owner_;
};

/// The last 3l+2 columns of the upper-triangular transform G, each stored
/// over its band rows max(0, k-2l)..k.
class BandedTransform {
public:
    BandedTransform() = default;
    explicit BandedTransform(std::size_t l);

    std::size_t depth() const { return l_; }
    std::size_t retained() const { return owner_.size(); }
    std::size_t first_row(std::size_t k) const { return k > 2 * l_ ? k - 2 * l_ : 0; }

    /// Makes column k current in its slot, zero-filled.
    void start_column(std::size_t k);
    bool has_column(std::size_t k) const;
    /// Entry (j, k); rows above the band read as exactly zero.
    double at(std::size_t j, std::size_t k) const;
    /// Mutable entry inside the band; throws std::logic_error otherwise.
    double& ref(std::size_t j, std::size_t k);
    void clear();

private:
    std::size_t slot_of(std::size_t k) const { return k % owner_.size(); }

    std::size_t l_ = 0;
    std::vector<double> data_;
    std::vector<long long> owner_;
};

/// Dot products issued in one iteration for column `column` of G, rows
/// first_row..column. Rows below the v-row are raw (z, z) products.
struct PendingBatch {
    std::size_t tag = 0;
    std::size_t column = 0;
    std::size_t first_row = 0;
    std::vector<double> values;
};

struct StepOutcome {
    enum class Kind { proceed, converged, hard_breakdown, happy_breakdown, pivot_breakdown, budget_exhausted };

    Kind kind = Kind::proceed;
    /// Cycle-local iteration index at which the outcome arose.
    std::size_t iter = 0;
    /// Square-root argument for the breakdown kinds (NaN otherwise).
    double root_argument = 0.0;
    /// Residual norm for converged.
    double norm = 0.0;
};

/// Optional hooks for diagnostics. Indices are local to the current cycle
/// (a restart starts a new cycle at index 0).
struct PlcgObserver {
    /// Column c of G is final; entries are rows first_row..c.
    std::function<void(std::size_t c, std::size_t first_row, std::span<const double> entries, double root_argument)>
        on_column;
    std::function<void(std::size_t k, std::span<const double> v)> on_basis;
    /// z_j after its last update.
    std::function<void(std::size_t j, std::span<const double> z)> on_auxiliary;
    std::function<void(std::size_t k, double gamma, double delta)> on_tridiagonal;
    std::function<void(std::size_t k, std::span<const double> x, double zeta)> on_solution;
    std::function<void(std::size_t cycle, std::span<const double> x)> on_restart;
};

/// All mutable state of one p(l)-CG run.
struct PipelineState {
    const CsrMatrix* a = nullptr;
    const Preconditioner* m = nullptr;
    Vector b;
    ShiftSet shifts;
    SolveConfig cfg;
    std::size_t l = 1;
    std::size_t n = 0;

    /// Current outer iteration within the cycle.
    std::size_t i = 0;
    /// Solution index of the cycle start in the cumulative count.
    std::size_t k_offset = 0;
    std::size_t cycle = 0;
    std::size_t restarts = 0;
    std::size_t breakdowns = 0;

    VectorWindow z;
    VectorWindow v;
    /// Unpreconditioned auxiliary vectors, preconditioned mode only.
    VectorWindow zhat;
    BandedTransform g;

    std::vector<double> gamma, delta, eta, lambda, zeta;
    Vector p;
    Vector x;
    /// Solution index (cycle-local) that x currently holds.
    std::size_t x_index = 0;

    std::deque<PendingBatch> pending;
    /// Fresh dot products computed so far (mirrored entries excluded).
    std::size_t dot_products = 0;
    std::size_t dot_products_last = 0;
    /// (issued, consumed) iteration pairs of every consumed batch.
    std::vector<std::pair<std::size_t, std::size_t>> reduction_log;

    double r0_norm = 0.0;
    double b_norm = 0.0;
    double last_root_argument = 0.0;

    bool preconditioned() const { return m != nullptr && !m->is_identity(); }
    /// Vectors held by the basis windows.
    std::size_t vector_census() const { return z.slots() + v.slots() + zhat.slots(); }
};

/// r0 = b - A x0, v0 = z0 = r0 / |r0| (or the M-norm variant), g00 = 1.
/// Returns converged when r0 vanishes or already satisfies the tolerance.
StepOutcome plcg_init(PipelineState& s, const CsrMatrix& a, const Preconditioner& m, std::span<const double> b,
                      std::span<const double> x0, std::size_t l, const ShiftSet& shifts, const SolveConfig& cfg);

/// K1: z_{i+1} = (A - sigma_i) z_i for i < l, else the raw A z_i.
void advance_z(PipelineState& s);
/// K2: consumes the batch issued l iterations ago and finalizes column
/// i-l+1 of G. Returns proceed, hard_breakdown or happy_breakdown.
StepOutcome update_transform(PipelineState& s, const PlcgObserver* obs = nullptr);
/// K3: gamma_{i-l}, delta_{i-l}. A happy breakdown sets delta_{i-l} = 0.
void update_tridiagonal(PipelineState& s, bool happy);
/// K4: v_{i-l+1} and the three-term correction of z_{i+1}.
void update_bases(PipelineState& s, const PlcgObserver* obs = nullptr);
/// K5: the l+1 fresh dot products for column i+1, queued under tag i.
void queue_dot_products(PipelineState& s, const PlcgObserver* obs = nullptr);
/// K6: LU recurrences, search direction and x_{i-l}. Returns converged,
/// pivot_breakdown or proceed.
StepOutcome update_solution(PipelineState& s, ConvergenceTrace& trace, const PlcgObserver* obs = nullptr);
/// |zeta| of the latest solution index.
double residual_norm(const PipelineState& s);
/// One full outer iteration K1..K6. A happy breakdown performs the final
/// solution update and verifies it with an explicit residual: converged if
/// it holds, happy_breakdown (restart required) if not.
StepOutcome plcg_step(PipelineState& s, ConvergenceTrace& trace, const PlcgObserver* obs = nullptr);
/// Records the breakdown and restarts from the current x. Returns proceed
/// after a restart, converged if the restart point already meets the
/// tolerance, or the original outcome when max_restarts is exhausted.
StepOutcome handle_breakdown(PipelineState& s, ConvergenceTrace& trace, const StepOutcome& outcome,
                             const PlcgObserver* obs = nullptr);

/// Runs p(l)-CG with cfg.precond as preconditioner.
ConvergenceTrace solve_plcg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                            std::size_t l, const ShiftSet& shifts, const SolveConfig& cfg,
                            const PlcgObserver& observer = {});

}  // namespace plcg
