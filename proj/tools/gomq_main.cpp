#include <cstdio>
int main() { std::puts("gomq: not yet wired"); return 3; }
