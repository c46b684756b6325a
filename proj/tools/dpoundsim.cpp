#include "dpound/cli.hpp"

int main(int argc, char** argv) { return dpound::run_cli(argc, argv); }
