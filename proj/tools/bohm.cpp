#include <string>
#include <vector>

#include "bohm/cli_io.hpp"

int main(int argc, char** argv) {
    return bohm::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
