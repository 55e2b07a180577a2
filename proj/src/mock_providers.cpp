#include "wordalise/mock_providers.hpp"

#include <cctype>
#include <random>

#include "wordalise/lexicon.hpp"

namespace wordalise::mock {

using nlohmann::json;

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(char(std::tolower(c)));
  }
  return out;
}

CompletionResult reply(std::string text) {
  CompletionResult r;
  r.text = std::move(text);
  r.finish_reason = "stop";
  r.usage.completion_tokens = int(r.text.size() / 4);
  r.usage.total_tokens = r.usage.completion_tokens;
  return r;
}

const Message* last_user(const PromptBundle& bundle) {
  for (auto it = bundle.messages.rbegin(); it != bundle.messages.rend(); ++it) {
    if (it->role == Role::user) return &*it;
  }
  return nullptr;
}

// Generation requests end in a data/subject message; chat requests do not.
std::optional<std::string> generation_body(const PromptBundle& bundle) {
  const Message* m = last_user(bundle);
  if (!m || (m->tag != Tag::data && m->tag != Tag::subject)) return std::nullopt;
  if (auto body = fenced_body(m->content)) return body;
  return m->content;
}

std::string chat_echo(const PromptBundle& bundle) {
  const Message* m = last_user(bundle);
  std::string out = "Echo: " + (m ? m->content : std::string());
  std::string context;
  for (const auto& msg : bundle.messages) {
    if (msg.tag == Tag::knowledge && msg.role == Role::assistant) context += (context.empty() ? "" : " ") + msg.content;
  }
  if (!context.empty()) out += " Context: " + context;
  return out;
}

std::uint64_t request_seed(std::uint64_t base, const CompletionOptions& options, std::atomic<std::uint64_t>& calls) {
  return mix_seed(base, "request", options.seed ? *options.seed : calls.fetch_add(1) + 0x9e3779b97f4a7c15ULL);
}

}  // namespace

std::map<std::string, std::string> faithful_reading(const ReconstructionRequest& request) {
  const std::string text = normalize(request.wordalisation);
  std::map<std::string, std::string> out;
  for (const auto& f : request.factors) {
    if (f.classes.empty()) continue;
    std::string best = f.classes.front().label;
    std::size_t best_len = 0;
    for (const auto& c : f.classes) {
      for (const auto& phrase : c.phrases) {
        std::string cue = fill_template(f.pattern.empty() ? "{phrase}" : f.pattern, {{"phrase", phrase}});
        if (auto brace = cue.find('{'); brace != std::string::npos) cue.erase(brace);
        cue = normalize(cue);
        if (cue.size() > best_len && text.find(cue) != std::string::npos) {
          best = c.label;
          best_len = cue.size();
        }
      }
    }
    out[f.name] = best;
  }
  return out;
}

CompletionResult EchoProvider::complete(const PromptBundle& bundle, const CompletionOptions&) {
  if (auto req = parse_reconstruction_request(bundle)) return reply(json(faithful_reading(*req)).dump());
  if (auto body = generation_body(bundle)) return reply(*body);
  return reply(chat_echo(bundle));
}

CompletionResult IgnoreDataProvider::complete(const PromptBundle& bundle, const CompletionOptions&) {
  if (auto req = parse_reconstruction_request(bundle)) return reply(json(faithful_reading(*req)).dump());
  if (generation_body(bundle)) return reply(std::string(kCanned));
  return reply(std::string(kCanned));
}

CompletionResult RandomClassProvider::complete(const PromptBundle& bundle, const CompletionOptions& options) {
  auto req = parse_reconstruction_request(bundle);
  if (!req) {
    if (auto body = generation_body(bundle)) return reply(*body);
    return reply(chat_echo(bundle));
  }
  const std::uint64_t seed = request_seed(seed_, options, calls_);
  json out = json::object();
  for (const auto& f : req->factors) {
    if (f.classes.empty()) continue;
    std::mt19937_64 rng(mix_seed(seed, f.name));
    std::uniform_int_distribution<std::size_t> pick(0, f.classes.size() - 1);
    out[f.name] = f.classes[pick(rng)].label;
  }
  return reply(out.dump());
}

CompletionResult FaultyProvider::complete(const PromptBundle& bundle, const CompletionOptions& options) {
  if (parse_reconstruction_request(bundle)) {
    const std::uint64_t h = mix_seed(request_seed(seed_, options, calls_), "fault");
    const double u = double(h >> 11) * 0x1.0p-53;
    if (u < fault_rate_) {
      faults_.fetch_add(1);
      return reply("{\"classes\": [\"unterminated");
    }
  }
  return inner_->complete(bundle, options);
}

CompletionResult FailingProvider::complete(const PromptBundle&, const CompletionOptions&) {
  calls_.fetch_add(1);
  throw Error(code_, "injected failure");
}

std::vector<Eigen::VectorXd> HashingEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
    auto feature = [&](std::string_view f) {
      const std::uint64_t h = mix_seed(seed_, f);
      v(Eigen::Index(h % std::uint64_t(dim_))) += (h >> 63) ? -1.0 : 1.0;
    };
    std::string word, previous;
    auto flush = [&] {
      if (word.empty()) return;
      const std::string padded = "#" + word + "#";
      for (std::size_t i = 0; i + 3 <= padded.size(); ++i) feature(std::string_view(padded).substr(i, 3));
      // Whole words and word pairs keep "final third passes" apart from "final third receptions".
      feature("w:" + word);
      if (!previous.empty()) feature("b:" + previous + " " + word);
      previous = std::move(word);
      word.clear();
    };
    for (unsigned char c : t) {
      if (std::isalnum(c)) {
        word.push_back(char(std::tolower(c)));
      } else {
        flush();
      }
    }
    flush();
    if (v.isZero()) v(0) = 1.0;  // blank text still gets a direction
    out.push_back(std::move(v));
  }
  return out;
}

std::shared_ptr<ChatProvider> make_chat_mock(std::string_view kind, std::uint64_t seed) {
  if (kind == "echo") return std::make_shared<EchoProvider>();
  if (kind == "ignore-data" || kind == "ignore") return std::make_shared<IgnoreDataProvider>();
  if (kind == "random") return std::make_shared<RandomClassProvider>(seed);
  throw Error(Errc::InvalidConfig, "unknown mock provider '" + std::string(kind) + "'");
}

}  // namespace wordalise::mock
