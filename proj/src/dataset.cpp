#include "pllcop/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_map>

#include "json.hpp"

namespace pllcop {

using nlohmann::json;

namespace {
constexpr int kVersion = 1;
constexpr const char* kFormat = "pll-samples";

Status parse_status(const std::string& s) {
  if (s == "proof") return Status::Proof;
  if (s == "failure") return Status::Failure;
  if (s == "unknown") return Status::Unknown;
  throw Error("unknown status '" + s + "'");
}

json derivation_to_json(const Derivation& d) {
  json actions = json::array();
  for (const Action& a : d.actions) actions.push_back(to_string(a));
  return {{"actions", std::move(actions)}, {"status", to_string(d.status)}, {"length", d.length()}};
}

Derivation derivation_from_json(const json& j, const std::string& problem) {
  Derivation d{problem, {}, parse_status(j.at("status").get<std::string>())};
  for (const json& a : j.at("actions")) d.actions.push_back(parse_action(a.get<std::string>()));
  if (j.at("length").get<std::size_t>() != d.actions.size()) throw Error("length does not match actions");
  return d;
}
}  // namespace

std::optional<PllSample> extract_sample(const SearchTree& t) {
  PllSample s{t.problem, proofs_in_tree(t), failures_in_tree(t), {}};
  if (s.proofs.empty()) return std::nullopt;
  std::unordered_map<int, int> index;  // tree node -> target index
  for (NodeTarget& nt : extract_targets(t)) {
    const TreeNode& node = t.nodes[nt.node];
    TreeTarget target;
    if (node.parent >= 0) {
      target.parent = index.at(node.parent);
      target.action = node.action;
    }
    target.policy = std::move(nt.policy);
    target.value = nt.value;
    index.emplace(nt.node, static_cast<int>(s.targets.size()));
    s.targets.push_back(std::move(target));
  }
  return s;
}

const Derivation& select_single(const std::vector<Derivation>& ds, const SelectionStrategy& strat) {
  if (ds.empty()) throw Error("select_single on an empty derivation list");
  switch (strat.kind) {
    case SelectionStrategy::Kind::Short:
      return *std::min_element(ds.begin(), ds.end(), [](const Derivation& a, const Derivation& b) {
        return a.length() != b.length() ? a.length() < b.length() : a.actions < b.actions;
      });
    case SelectionStrategy::Kind::Long:
      return *std::min_element(ds.begin(), ds.end(), [](const Derivation& a, const Derivation& b) {
        return a.length() != b.length() ? a.length() > b.length() : a.actions < b.actions;
      });
    case SelectionStrategy::Kind::Rand: {
      std::mt19937_64 rng(hash_combine(strat.seed, stable_hash(ds.front().problem)));
      return ds[std::uniform_int_distribution<std::size_t>(0, ds.size() - 1)(rng)];
    }
  }
  throw Error("unknown selection strategy");
}

const Derivation& select_single(const PllSample& s, const SelectionStrategy& strat) {
  return select_single(s.proofs, strat);
}

std::pair<Derivation, std::optional<Derivation>> pair_with_failure(const PllSample& s,
                                                                   const SelectionStrategy& strat) {
  std::optional<Derivation> failure;
  if (!s.failures.empty()) failure = select_single(s.failures, strat);
  return {select_single(s.proofs, strat), std::move(failure)};
}

Action parse_action(const std::string& text) {
  auto fail = [&]() -> Action { throw Error("malformed action '" + text + "'"); };
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') return fail();
  const std::string head = text.substr(0, open);
  const std::string body = text.substr(open + 1, text.size() - open - 2);
  try {
    std::size_t used = 0;
    if (head == "start") {
      const int c = std::stoi(body, &used);
      if (used != body.size()) return fail();
      return Action::start(c);
    }
    if (head == "red") {
      const int i = std::stoi(body, &used);
      if (used != body.size()) return fail();
      return Action::reduction(i);
    }
    if (head == "ext") {
      const auto comma = body.find(',');
      if (comma == std::string::npos) return fail();
      const std::string first = body.substr(0, comma), second = body.substr(comma + 1);
      const int c = std::stoi(first, &used);
      if (used != first.size()) return fail();
      const int l = std::stoi(second, &used);
      if (used != second.size()) return fail();
      return Action::extension(c, l);
    }
  } catch (const std::logic_error&) {
    return fail();
  }
  return fail();
}

std::string sample_to_json(const PllSample& s) {
  json j;
  j["problem"] = s.problem;
  j["proofs"] = json::array();
  for (const Derivation& d : s.proofs) j["proofs"].push_back(derivation_to_json(d));
  j["failures"] = json::array();
  for (const Derivation& d : s.failures) j["failures"].push_back(derivation_to_json(d));
  j["targets"] = json::array();
  for (const TreeTarget& t : s.targets) {
    j["targets"].push_back(
        {{"parent", t.parent}, {"action", to_string(t.action)}, {"policy", t.policy}, {"value", t.value}});
  }
  return j.dump();
}

PllSample sample_from_json(const std::string& line) {
  const json j = json::parse(line);
  PllSample s;
  s.problem = j.at("problem").get<std::string>();
  for (const json& d : j.at("proofs")) s.proofs.push_back(derivation_from_json(d, s.problem));
  for (const json& d : j.at("failures")) s.failures.push_back(derivation_from_json(d, s.problem));
  for (const json& t : j.at("targets")) {
    TreeTarget target;
    target.parent = t.at("parent").get<int>();
    if (target.parent >= 0) target.action = parse_action(t.at("action").get<std::string>());
    target.policy = t.at("policy").get<std::vector<double>>();
    target.value = t.at("value").get<double>();
    s.targets.push_back(std::move(target));
  }
  return s;
}

void save_samples(const std::vector<PllSample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << json{{"format", kFormat}, {"version", kVersion}}.dump() << '\n';
  for (const PllSample& s : samples) out << sample_to_json(s) << '\n';
  if (!out) throw Error("write failed: " + path);
}

std::vector<PllSample> load_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": missing header");
  try {
    const json header = json::parse(line);
    if (header.at("format").get<std::string>() != kFormat) throw Error("not a sample file");
    const int version = header.at("version").get<int>();
    if (version != kVersion) {
      throw Error("unsupported sample format version " + std::to_string(version) + " (expected " +
                  std::to_string(kVersion) + ")");
    }
  } catch (const json::exception& e) {
    throw Error(path + ": malformed header: " + e.what());
  }
  std::vector<PllSample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(line));
    } catch (const std::exception& e) {
      throw Error(path + ": malformed record " + std::to_string(out.size()) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pllcop
