#include <string>
#include <vector>

#include "webweaver/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return webweaver::cli::run(std::move(args));
}
