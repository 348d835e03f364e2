#include "cli.hpp"

int main(int argc, char** argv) { return pdmpnet::cli::main_entry(argc, argv); }
