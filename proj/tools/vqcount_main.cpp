#include <cstdio>

int main() {
  std::puts("vqcount: subcommands not wired yet");
  return 1;
}
