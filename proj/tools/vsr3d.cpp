#include "vsr/app.hpp"

int main(int argc, char** argv) { return vsr::app::run(argc, argv); }
