#include "pseudoris/backends.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace pseudoris {

void Vocabulary::validate() const {
  if (tokens.empty()) throw UsageError("Vocabulary: empty token list");
  std::set<std::string> seen;
  for (const auto& t : tokens) {
    if (!seen.insert(t).second) {
      throw UsageError("Vocabulary: duplicate token '" + t + "'");
    }
  }
  const int n = size();
  if (bos_id < 0 || bos_id >= n || eos_id < 0 || eos_id >= n) {
    throw UsageError("Vocabulary: bos/eos out of range");
  }
  if (bos_id == eos_id) throw UsageError("Vocabulary: bos and eos coincide");
}

std::string sequence_text(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (const TokenId id : seq.ids) {
    if (id == vocab.bos_id || id == vocab.eos_id) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::captioner: return "captioner";
    case BackendKind::scorer: return "scorer";
    case BackendKind::mask_extractor: return "mask_extractor";
  }
  return "unknown";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "captioner") return BackendKind::captioner;
  if (s == "scorer") return BackendKind::scorer;
  if (s == "mask_extractor") return BackendKind::mask_extractor;
  throw UsageError("unknown backend kind '" + s + "'");
}

template <typename Backend>
RegistrationHandle BackendRegistry::add(
    std::map<std::string, Entry<Backend>>& table, BackendKind kind,
    const std::string& name, Factory<Backend> factory, bool exclusive) {
  if (name.empty()) throw UsageError("register_backend: empty name");
  if (!factory) throw UsageError("register_backend: null factory");
  if (table.count(name)) {
    throw RegistrationError("backend '" + name + "' already registered as " +
                            to_string(kind));
  }
  table[name] = Entry<Backend>{std::move(factory), exclusive, nullptr};
  return {kind, name};
}

template <typename Backend>
std::shared_ptr<Backend> BackendRegistry::get(
    const std::map<std::string, Entry<Backend>>& table, BackendKind kind,
    const std::string& name) {
  const auto it = table.find(name);
  if (it == table.end()) {
    std::ostringstream msg;
    msg << "no " << to_string(kind) << " named '" << name << "'; available:";
    if (table.empty()) {
      msg << " (none)";
    } else {
      for (const auto& [n, _] : table) msg << ' ' << n;
    }
    throw LookupError(msg.str());
  }
  if (!it->second.instance) {
    it->second.instance = it->second.factory();
    if (!it->second.instance) {
      throw ContractError("factory for '" + name + "' returned null");
    }
  }
  return it->second.instance;
}

RegistrationHandle BackendRegistry::register_captioner(
    const std::string& name, Factory<CaptionerBackend> factory, bool exclusive) {
  return add(captioners_, BackendKind::captioner, name, std::move(factory),
             exclusive);
}

RegistrationHandle BackendRegistry::register_scorer(
    const std::string& name, Factory<ScorerBackend> factory, bool exclusive) {
  return add(scorers_, BackendKind::scorer, name, std::move(factory), exclusive);
}

RegistrationHandle BackendRegistry::register_mask_extractor(
    const std::string& name, Factory<MaskExtractorBackend> factory,
    bool exclusive) {
  return add(extractors_, BackendKind::mask_extractor, name, std::move(factory),
             exclusive);
}

std::shared_ptr<CaptionerBackend> BackendRegistry::resolve_captioner(
    const std::string& name) const {
  return get(captioners_, BackendKind::captioner, name);
}

std::shared_ptr<ScorerBackend> BackendRegistry::resolve_scorer(
    const std::string& name) const {
  return get(scorers_, BackendKind::scorer, name);
}

std::shared_ptr<MaskExtractorBackend> BackendRegistry::resolve_mask_extractor(
    const std::string& name) const {
  return get(extractors_, BackendKind::mask_extractor, name);
}

std::vector<std::string> BackendRegistry::names(BackendKind kind) const {
  std::vector<std::string> out;
  switch (kind) {
    case BackendKind::captioner:
      for (const auto& [n, _] : captioners_) out.push_back(n);
      break;
    case BackendKind::scorer:
      for (const auto& [n, _] : scorers_) out.push_back(n);
      break;
    case BackendKind::mask_extractor:
      for (const auto& [n, _] : extractors_) out.push_back(n);
      break;
  }
  return out;  // std::map iteration is already lexicographic
}

bool BackendRegistry::is_exclusive(BackendKind kind,
                                   const std::string& name) const {
  switch (kind) {
    case BackendKind::captioner: {
      const auto it = captioners_.find(name);
      if (it == captioners_.end()) break;
      return it->second.exclusive;
    }
    case BackendKind::scorer: {
      const auto it = scorers_.find(name);
      if (it == scorers_.end()) break;
      return it->second.exclusive;
    }
    case BackendKind::mask_extractor: {
      const auto it = extractors_.find(name);
      if (it == extractors_.end()) break;
      return it->second.exclusive;
    }
  }
  throw LookupError("no " + to_string(kind) + " named '" + name + "'");
}

BackendRegistry& default_registry() {
  static BackendRegistry registry;
  return registry;
}

}  // namespace pseudoris
