#include <iostream>
int main() { std::cout << "localcoin\n"; return 0; }
