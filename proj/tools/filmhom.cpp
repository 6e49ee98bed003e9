#include <string>
#include <vector>

#include "filmhom/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return filmhom::cli::run(args);
}
