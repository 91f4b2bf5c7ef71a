#include "embodied/cli.hpp"

int main(int argc, char** argv) { return embodied::run_cli(argc, argv); }
