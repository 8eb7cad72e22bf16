#include "fpquant/cli.hpp"

int main(int argc, char** argv) { return fpquant::run_cli(argc, argv); }
