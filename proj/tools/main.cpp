#include <vector>

#include "cablesift/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cablesift::cli::run(std::move(args));
}
