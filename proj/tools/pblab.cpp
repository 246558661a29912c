#include <pblab/cli.hpp>

int main(int argc, char** argv) { return pblab::cli::run_cli(argc, argv); }
