#include "ddpbench/engine.hpp"

#include <atomic>
#include <sstream>

namespace ddpbench {

namespace {

std::atomic<std::uint32_t> next_engine_id{1};

std::uint64_t mask_for(unsigned parties) {
  return parties >= 64 ? ~0ull : ((1ull << parties) - 1);
}

void check_parties(unsigned parties) {
  if (parties < 2) throw ConfigError("need at least 2 parties");
  if (parties > kMaxParties) throw ConfigError("at most 64 parties");
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kDealerStream = 0xDEA1E5;
constexpr std::uint64_t kSharingStream = 0x5A1E5;

}  // namespace

std::string CostLedger::to_record() const {
  std::ostringstream os;
  os << "and_gates=" << and_gates << ",xor_gates=" << xor_gates
     << ",and_depth=" << and_depth << ",input_random_bits=" << input_random_bits
     << ",triples_consumed=" << triples_consumed << ",parties=" << parties;
  return os.str();
}

CostLedger& CostLedger::operator+=(const CostLedger& o) {
  and_gates += o.and_gates;
  xor_gates += o.xor_gates;
  and_depth = std::max(and_depth, o.and_depth);
  input_random_bits += o.input_random_bits;
  triples_consumed += o.triples_consumed;
  if (parties == 0) parties = o.parties;
  return *this;
}

RandomTape RandomTape::seeded(std::uint64_t seed, unsigned parties) {
  check_parties(parties);
  RandomTape t;
  t.parties_ = parties;
  t.seed_ = seed;
  for (unsigned p = 0; p < parties; ++p)
    t.streams_.push_back(Stream{derived_rng(seed, p), 0, 0});
  return t;
}

RandomTape RandomTape::replay(std::vector<std::vector<std::uint8_t>> per_party) {
  check_parties(static_cast<unsigned>(per_party.size()));
  RandomTape t;
  t.parties_ = static_cast<unsigned>(per_party.size());
  t.replaying_ = true;
  t.recorded_ = std::move(per_party);
  return t;
}

void RandomTape::fix_party(unsigned party, bool value) {
  if (party >= parties_) throw ConfigError("no such party");
  fixed_mask_ |= 1ull << party;
  if (value)
    fixed_value_ |= 1ull << party;
  else
    fixed_value_ &= ~(1ull << party);
}

void RandomTape::release_party(unsigned party) {
  if (party >= parties_) throw ConfigError("no such party");
  fixed_mask_ &= ~(1ull << party);
  fixed_value_ &= ~(1ull << party);
}

std::uint64_t RandomTape::next_replay_mask() {
  std::uint64_t mask = 0;
  for (unsigned p = 0; p < parties_; ++p) {
    if (fixed_mask_ >> p & 1) continue;
    if (replay_pos_ >= recorded_[p].size())
      throw TapeError("party " + std::to_string(p) + " tape exhausted");
    mask |= static_cast<std::uint64_t>(recorded_[p][replay_pos_] & 1) << p;
  }
  ++replay_pos_;
  return (mask & ~fixed_mask_) | fixed_value_;
}

Engine::Engine(unsigned parties, std::uint64_t seed)
    : Engine(RandomTape::seeded(seed, parties), seed) {}

Engine::Engine(RandomTape tape, std::uint64_t dealer_seed)
    : parties_(tape.parties()),
      party_mask_(mask_for(tape.parties())),
      id_(next_engine_id++),
      tape_(std::move(tape)),
      dealer_(derived_rng(dealer_seed, kDealerStream)),
      sharing_(derived_rng(dealer_seed, kSharingStream)) {
  check_parties(parties_);
  ledger_.parties = parties_;
}

SecretBit Engine::share(bool value) {
  std::uint64_t s = sharing_() & party_mask_ & ~1ull;
  s |= static_cast<std::uint64_t>((std::popcount(s) & 1) ^ value);
  return SecretBit{s, id_, 0};
}

SecretWord Engine::share(std::int64_t value, unsigned width) {
  if (width == 0 || width > 64) throw ShapeError("word width must be 1..64");
  SecretWord w(width);
  for (unsigned i = 0; i < width; ++i)
    w[i] = share(static_cast<bool>((static_cast<std::uint64_t>(value) >> i) & 1));
  return w;
}

SecretWord Engine::constant_word(std::int64_t value, unsigned width) const {
  SecretWord w(width);
  for (unsigned i = 0; i < width; ++i)
    w[i] = constant(i < 64 && ((static_cast<std::uint64_t>(value) >> i) & 1));
  return w;
}

std::uint64_t Engine::reconstruct_unsigned(const SecretWord& x) const {
  if (x.width() == 0 || x.width() > 64) throw ShapeError("word width must be 1..64");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < x.width(); ++i)
    v |= static_cast<std::uint64_t>(reconstruct(x[i])) << i;
  return v;
}

std::int64_t Engine::reconstruct(const SecretWord& x) const {
  std::uint64_t v = reconstruct_unsigned(x);
  std::size_t w = x.width();
  if (w < 64 && (v >> (w - 1) & 1)) v |= ~0ull << w;
  return static_cast<std::int64_t>(v);
}

std::vector<bool> Engine::reconstruct_bits(const SecretWord& x) const {
  std::vector<bool> out(x.width());
  for (std::size_t i = 0; i < x.width(); ++i) out[i] = reconstruct(x[i]);
  return out;
}

SecretWord Engine::input_secret_word(unsigned party, std::int64_t value,
                                     unsigned width) {
  if (party >= parties_) throw ConfigError("no such party");
  if (width == 0 || width > 63) throw ShapeError("word width must be 1..63");
  std::int64_t lo = -(std::int64_t{1} << (width - 1));
  std::int64_t hi = (std::int64_t{1} << width) - 1;
  if (value < lo || value > hi)
    throw RangeError(std::to_string(value) + " does not fit " +
                     std::to_string(width) + " bits");
  ledger_.input_random_bits += width;
  return share(value, width);
}

}  // namespace ddpbench
