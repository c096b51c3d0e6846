#include <iostream>
#include <string>
#include <vector>

#include "lyapstream/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lyapstream::run_cli(args, std::cout, std::cerr);
}
