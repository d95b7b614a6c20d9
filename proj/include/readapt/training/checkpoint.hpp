#pragma once

#include <map>
#include <set>
#include <string>

#include "readapt/data/io.hpp"
#include "readapt/training/model.hpp"

namespace readapt {

// Checkpoint text layout (one record per line, fields separated by a single
// space unless noted):
//
//   readapt-checkpoint 1
//   variant <name>
//   config <key> <value>                       one line per TrainConfig key
//   relations <n>
//   <name>\t<seen 0|1>                         n lines, in id order
//   words <n>
//   <token>                                    n lines, in id order
//   tensor <name> <rank> <dim>...              then one line of values
//   targets <count> <dim>
//   <relation id> <value>...                   count lines
//   log <n>
//   <epoch> <loss> <dev_seen> <dev_unseen> <critic updates> <generator updates>
//   end
//
// Reals use the shortest text that parses back to the same double, so a
// save/load round trip is exact. Tensor "general" holds e_g; every other
// tensor is a model parameter.

inline constexpr const char* kCheckpointMagic = "readapt-checkpoint 1";

namespace detail {

inline void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << ' ' << t.shape().size();
  for (auto d : t.shape()) out << ' ' << d;
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << format_real(t[i]);
  out << '\n';
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw FormatError(path_, line_ + 1, "unexpected end of checkpoint");
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }
  std::vector<std::string_view> fields(const std::string& line) const { return split_ws(line); }
  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(path_, line_, msg); }
  std::size_t size_field(std::string_view s) const {
    std::size_t v = 0;
    if (!parse_size(s, v)) fail("expected a count, found '" + std::string(s) + "'");
    return v;
  }
  double real_field(std::string_view s) const {
    double v = 0;
    if (!parse_real(s, v)) fail("malformed number '" + std::string(s) + "'");
    return v;
  }
  /// Reads "<keyword> <n>" and returns n.
  std::size_t header(const char* keyword) {
    const std::string line = next();
    auto f = fields(line);
    if (f.size() != 2 || f[0] != keyword) fail(std::string("expected '") + keyword + " <count>'");
    return size_field(f[1]);
  }

 private:
  std::istream& in_;
  std::string path_;
  std::size_t line_ = 0;
};

}  // namespace detail

inline void save_checkpoint(TrainedModel& m, const fs::path& path) {
  auto out = open_out(path);
  out << kCheckpointMagic << '\n';
  out << "variant " << variant_name(m.variant) << '\n';
  for (const auto& [k, v] : m.config.to_map()) out << "config " << k << ' ' << v << '\n';
  out << "relations " << m.relations.size() << '\n';
  for (std::size_t i = 0; i < m.relations.size(); ++i)
    out << m.relations.name(i) << '\t' << (m.relations.is_seen(i) ? 1 : 0) << '\n';
  out << "words " << m.words.size() << '\n';
  for (std::size_t i = 0; i < m.words.size(); ++i) out << m.words.token(i) << '\n';
  detail::write_tensor(out, "general", m.general);
  for (auto* p : m.all_parameters()) detail::write_tensor(out, p->name, p->value);
  out << "targets " << m.targets.size() << ' ' << m.targets.dim() << '\n';
  for (auto id : m.targets.keys()) {
    out << id;
    for (double v : m.targets.get(id)) out << ' ' << format_real(v);
    out << '\n';
  }
  out << "log " << m.log.size() << '\n';
  for (const auto& r : m.log)
    out << r.epoch << ' ' << format_real(r.loss) << ' ' << format_real(r.dev_seen_accuracy) << ' '
        << format_real(r.dev_unseen_accuracy) << ' ' << r.critic_updates << ' ' << r.generator_updates << '\n';
  out << "end\n";
  close_checked(out, path);
}

inline TrainedModel load_checkpoint(const fs::path& path) {
  auto in = open_in(path);
  detail::LineReader rd(in, path.string());
  if (rd.next() != kCheckpointMagic) rd.fail("not a checkpoint (bad magic line)");

  TrainedModel m;
  {
    const std::string line = rd.next();
    auto f = rd.fields(line);
    if (f.size() != 2 || f[0] != "variant") rd.fail("expected 'variant <name>'");
    try {
      m.variant = parse_variant(f[1]);
    } catch (const ContractError& e) {
      rd.fail(e.what());
    }
  }
  std::string line = rd.next();
  while (line.rfind("config ", 0) == 0) {
    auto f = rd.fields(line);
    if (f.size() != 3) rd.fail("expected 'config <key> <value>'");
    try {
      if (!m.config.set(std::string(f[1]), std::string(f[2]))) rd.fail("unknown config key '" + std::string(f[1]) + "'");
    } catch (const ContractError& e) {
      rd.fail(e.what());
    }
    line = rd.next();
  }
  {
    auto f = rd.fields(line);
    if (f.size() != 2 || f[0] != "relations") rd.fail("expected 'relations <count>'");
    const std::size_t n = rd.size_field(f[1]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string row = rd.next();
      auto cols = split_on(row, '\t');
      if (cols.size() != 2 || (cols[1] != "0" && cols[1] != "1")) rd.fail("expected '<relation>\\t<0|1>'");
      m.relations.add(std::string(cols[0]), cols[1] == "1");
    }
  }
  {
    const std::size_t n = rd.header("words");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = rd.next();
      if (m.words.add(tok) != i) rd.fail("word list out of order at '" + tok + "'");
    }
  }

  std::map<std::string, Tensor> tensors;
  for (line = rd.next(); line.rfind("tensor ", 0) == 0; line = rd.next()) {
    auto f = rd.fields(line);
    if (f.size() < 3) rd.fail("expected 'tensor <name> <rank> <dims>'");
    const std::string name(f[1]);
    const std::size_t rank = rd.size_field(f[2]);
    if (rank == 0 || f.size() != 3 + rank) rd.fail("tensor '" + name + "': bad shape");
    Shape shape;
    for (std::size_t i = 0; i < rank; ++i) shape.push_back(rd.size_field(f[3 + i]));
    const std::string values = rd.next();
    auto v = rd.fields(values);
    if (v.size() != shape_size(shape))
      rd.fail("tensor '" + name + "': expected " + std::to_string(shape_size(shape)) + " values, found " +
              std::to_string(v.size()));
    Tensor t(shape);
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = rd.real_field(v[i]);
    if (!tensors.emplace(name, std::move(t)).second) rd.fail("duplicate tensor '" + name + "'");
  }

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) rd.fail("missing tensor '" + name + "'");
    Tensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  m.general = take("general");
  if (m.general.rank() != 2 || m.general.rows() != m.relations.size())
    rd.fail("tensor 'general' must have one row per relation");
  Tensor word_table = take("word_emb");
  if (word_table.rank() != 2 || word_table.rows() != m.words.size())
    rd.fail("tensor 'word_emb' must have one row per word");
  for (std::size_t i = 0; i < m.relations.size(); ++i)
    m.relation_tokens.push_back(m.words.ids(tokenize_relation(m.relations.name(i))));

  // Rebuild the variant's parameter layout, then overwrite every value.
  const std::size_t d = m.general.cols();
  Rng rng(0);
  m.detector = RelationDetector(std::move(word_table), d, m.config.hidden, rng,
                                m.variant == ModelVariant::kBaselineFinetune);
  if (m.variant == ModelVariant::kBaselineFinetune) m.relation_table = Parameter{"rel_table", m.general, true};
  if (has_mapping(m.variant)) m.adapters.forward = LinearMap("adapter", d, rng, m.config.adapter_bias);
  if (uses_reconstruction(m.variant)) m.adapters.reverse = LinearMap("adapter_rev", d, rng, m.config.adapter_bias);
  if (uses_adversary(m.variant)) m.adapters.critic = DiscriminatorParams(d, m.config.critic_hidden, rng);
  for (auto* p : m.all_parameters()) {
    if (p->name == "word_emb") continue;
    Tensor t = take(p->name);
    if (t.shape() != p->value.shape())
      rd.fail("tensor '" + p->name + "' has shape " + shape_str(t.shape()) + ", expected " + shape_str(p->value.shape()));
    p->value = std::move(t);
  }
  if (!tensors.empty()) rd.fail("unexpected tensor '" + tensors.begin()->first + "' for this variant");

  {
    auto f = rd.fields(line);
    if (f.size() != 3 || f[0] != "targets") rd.fail("expected 'targets <count> <dim>'");
    const std::size_t n = rd.size_field(f[1]);
    m.targets = PseudoTargetStore(rd.size_field(f[2]));
    for (std::size_t i = 0; i < n; ++i) {
      const std::string row = rd.next();
      auto v = rd.fields(row);
      if (v.size() != m.targets.dim() + 1) rd.fail("pseudo target row has the wrong width");
      const std::size_t id = rd.size_field(v[0]);
      if (id >= m.relations.size() || !m.relations.is_seen(id)) rd.fail("pseudo target for a relation that is not seen");
      std::vector<double> vec;
      for (std::size_t j = 1; j < v.size(); ++j) vec.push_back(rd.real_field(v[j]));
      m.targets.set(id, std::move(vec));
    }
  }
  {
    const std::size_t n = rd.header("log");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string row = rd.next();
      auto v = rd.fields(row);
      if (v.size() != 6) rd.fail("log row must have 6 fields");
      m.log.push_back({rd.size_field(v[0]), rd.real_field(v[1]), rd.real_field(v[2]), rd.real_field(v[3]),
                       rd.size_field(v[4]), rd.size_field(v[5])});
    }
  }
  if (rd.next() != "end") rd.fail("expected 'end'");
  return m;
}

/// Training log as CSV: epoch, loss, dev-seen and dev-unseen accuracy, and
/// the update counts of the adversarial schedule.
inline void save_training_log(const std::vector<EpochLog>& log, const fs::path& path) {
  auto out = open_out(path);
  out << "epoch,loss,dev_seen_acc,dev_unseen_acc,critic_updates,generator_updates\n";
  for (const auto& r : log)
    out << r.epoch << ',' << format_real(r.loss) << ',' << format_real(r.dev_seen_accuracy) << ','
        << format_real(r.dev_unseen_accuracy) << ',' << r.critic_updates << ',' << r.generator_updates << '\n';
  close_checked(out, path);
}

}  // namespace readapt
