#include "graphtext/cli.hpp"

int main(int argc, char** argv) { return graphtext::run_cli(argc, argv); }
