#include "iontrap/cli.hpp"

int main(int argc, char** argv) { return iontrap::run_cli(argc, argv); }
