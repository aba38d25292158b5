#include <iostream>
#include "purrfect/music.hpp"
#include "purrfect/version.hpp"
int main() { std::cout << purrfect::software_version() << " " << purrfect::tone_at(20).frequency_hz << "\n"; }
