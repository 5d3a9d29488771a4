#include "cli_common.hpp"

int main(int argc, char** argv) {
    return qprep::cli::run_cli(argc, argv);
}
