#include <string>
#include <vector>

#include "diftgame/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return diftgame::cli::dispatch(args);
}
