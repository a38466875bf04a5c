// Command-line front end: generate suite surfaces, analyze a surface through
// the full verification pipeline, or run the whole suite. Fleshed out in
// stages; see README for usage.

#include <cstdio>

int main() {
    std::puts("cmcindex: CLI not wired up yet");
    return 2;
}
