#include "commands.hpp"

int main(int argc, char** argv) { return sulcikit::cli::run(argc, argv); }
