#include "plcg/errors.hpp"
#include "plcg/sparse.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace plcg {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '%') continue;
        return true;
    }
    return false;
}

}  // namespace

CsrMatrix parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw FormatError("empty Matrix Market stream");
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw FormatError("missing %%MatrixMarket banner");
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") throw FormatError("unsupported object '" + object + "'");
    if (format != "coordinate") throw FormatError("unsupported format '" + format + "', expected coordinate");
    if (field != "real" && field != "integer")
        throw FormatError("unsupported field '" + field + "', expected real");
    if (symmetry != "symmetric" && symmetry != "general")
        throw FormatError("unsupported symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    if (!next_data_line(in, line, lineno)) throw FormatError("missing size line");
    std::istringstream size_line(line);
    long long rows = -1, cols = -1, count = -1;
    if (!(size_line >> rows >> cols >> count) || rows < 0 || cols < 0 || count < 0)
        throw FormatError("malformed size line " + std::to_string(lineno));
    if (rows != cols)
        throw FormatError("matrix is " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected square");
    if (rows > std::numeric_limits<std::int32_t>::max()) throw SizeError("matrix dimension exceeds index range");

    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(symmetric ? 2 * count : count));
    for (long long k = 0; k < count; ++k) {
        if (!next_data_line(in, line, lineno))
            throw FormatError("expected " + std::to_string(count) + " entries, found " + std::to_string(k));
        std::istringstream entry(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(entry >> i >> j >> v)) throw FormatError("malformed entry on line " + std::to_string(lineno));
        if (i < 1 || j < 1 || i > rows || j > cols)
            throw FormatError("index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range on line " +
                              std::to_string(lineno));
        entries.push_back({i - 1, j - 1, v});
        if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
    }
    if (next_data_line(in, line, lineno))
        throw FormatError("trailing data after " + std::to_string(count) + " entries on line " + std::to_string(lineno));
    return CsrMatrix::from_triplets(static_cast<std::size_t>(rows), entries);
}

CsrMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return parse_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& a, bool symmetric_storage) {
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto v = a.values();
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (auto k = rp[i]; k < rp[i + 1]; ++k)
            if (!symmetric_storage || static_cast<std::size_t>(ci[k]) <= i) ++count;
    out << "%%MatrixMarket matrix coordinate real " << (symmetric_storage ? "symmetric" : "general") << '\n';
    out << a.size() << ' ' << a.size() << ' ' << count << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (auto k = rp[i]; k < rp[i + 1]; ++k)
            if (!symmetric_storage || static_cast<std::size_t>(ci[k]) <= i)
                out << i + 1 << ' ' << ci[k] + 1 << ' ' << v[k] << '\n';
}

}  // namespace plcg
