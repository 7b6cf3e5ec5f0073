#include "cli_app.hpp"

int main(int argc, char** argv) { return pulsemodes::cli::run(argc, argv); }
