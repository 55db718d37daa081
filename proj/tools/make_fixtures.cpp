// Writes the generated fixture matrices into the directory given as argv[1].

#include "plcg/sparse.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: plcg_make_fixtures DIR\n";
        return 1;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "gr_30_30.mtx");
    plcg::write_matrix_market(out, plcg::build_nine_point_2d(30, 30));
    return out ? 0 : 1;
}
