#include <string>
#include <vector>

#include "she/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return she::run_cli(std::move(args));
}
