#include "kens/cli.hpp"

int main(int argc, char** argv) { return kens::run_cli(argc, argv); }
