#include "tonnsim/cli.hpp"

int main(int argc, char** argv) { return tonnsim::run_cli(argc, argv); }
