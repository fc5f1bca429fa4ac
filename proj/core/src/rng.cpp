#include "qsmooth/rng.hpp"

#include <array>
#include <random>
#include <vector>

namespace qsmooth {

Engine make_stream(std::uint64_t master_seed, StreamKind kind, std::initializer_list<std::uint64_t> indices) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (indices.size() + 2));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master_seed);
  push(static_cast<std::uint64_t>(kind));
  for (auto i : indices) push(i);
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 8> state{};
  seq.generate(state.begin(), state.end());
  auto join = [&state](int i) { return (static_cast<std::uint64_t>(state[2 * i + 1]) << 32) | state[2 * i]; };
  std::uint64_t s[4] = {join(0), join(1), join(2), join(3)};
  if ((s[0] | s[1] | s[2] | s[3]) == 0) s[0] = 1;  // the all-zero state is a fixed point
  return Engine(s[0], s[1], s[2], s[3]);
}

}  // namespace qsmooth
