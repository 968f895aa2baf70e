#include "commands.hpp"

int main(int argc, char** argv) { return lsabr::cli::run(argc, argv); }
