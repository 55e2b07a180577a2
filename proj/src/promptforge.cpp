#include "wordalise/promptforge.hpp"

#include <algorithm>

#include "wordalise/error.hpp"

namespace wordalise {

namespace {

void add_knowledge(PromptBundle& b, const QACorpus& qa) {
  for (const auto& p : qa.pairs) {
    b.messages.push_back({Role::user, p.user, Tag::knowledge});
    b.messages.push_back({Role::assistant, p.assistant, Tag::knowledge});
  }
}

std::string exemplar_body(const ApplicationConfig& config, const FewShotExample& ex, bool stripped) {
  if (stripped) return ex.subject.empty() ? std::string() : data_preamble(config, ex.subject);
  return ex.user;
}

// Shared skeleton for both conditions; they differ only in the three places
// flagged by `control`.
PromptBundle build(const ApplicationConfig& config, const QACorpus& qa, std::span<const FewShotExample> few_shot,
                   const Entity& entity, const SyntheticText* synthetic) {
  const bool control = synthetic == nullptr;
  PromptBundle b;
  b.messages.push_back({Role::system, config.system_prompt, Tag::system});

  std::string instructions = config.answer_instructions;
  if (control) instructions += " " + std::string(kControlSentence);
  const Message instruction_msg{Role::user, instructions, Tag::instructions};

  if (config.instructions_before_knowledge) {
    b.messages.push_back(instruction_msg);
    add_knowledge(b, qa);
  } else {
    add_knowledge(b, qa);
    b.messages.push_back(instruction_msg);
  }

  for (std::size_t i = 0; i < few_shot.size(); ++i) {
    const bool strip = control && i == 0;
    const std::string body = exemplar_body(config, few_shot[i], strip);
    b.messages.push_back({Role::user, body.empty() ? std::string(kDataLead.substr(0, kDataLead.size() - 1)) : wrap_data(body),
                          Tag::few_shot});
    b.messages.push_back({Role::assistant, few_shot[i].assistant, Tag::few_shot});
  }
  if (few_shot.empty()) b.warnings.push_back("EmptyFewShot: no exemplars; the model gets no example of the answer style");

  const std::string preamble = data_preamble(config, entity.label);
  if (control) {
    b.messages.push_back({Role::user, wrap_data(preamble), Tag::subject});
  } else {
    const std::string body = preamble.empty() ? synthetic->joined : preamble + " " + synthetic->joined;
    b.messages.push_back({Role::user, wrap_data(body), Tag::data});
  }
  return b;
}

}  // namespace

std::size_t PromptBundle::count(Tag tag) const {
  return std::size_t(std::count_if(messages.begin(), messages.end(), [&](const Message& m) { return m.tag == tag; }));
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "";
}

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::system: return "system";
    case Tag::knowledge: return "knowledge";
    case Tag::instructions: return "instructions";
    case Tag::few_shot: return "few_shot";
    case Tag::data: return "data";
    case Tag::subject: return "subject";
    case Tag::history: return "history";
    case Tag::query: return "query";
  }
  return "";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw Error(Errc::BadRequest, "unknown role '" + std::string(s) + "'");
}

Tag tag_from_string(std::string_view s) {
  for (Tag t : {Tag::system, Tag::knowledge, Tag::instructions, Tag::few_shot, Tag::data, Tag::subject, Tag::history,
                Tag::query}) {
    if (to_string(t) == s) return t;
  }
  throw Error(Errc::BadRequest, "unknown tag '" + std::string(s) + "'");
}

std::string wrap_data(std::string_view body) { return std::string(kDataLead) + "```" + std::string(body) + "```"; }

std::optional<std::string> fenced_body(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  const auto close = text.find("```", open + 3);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(open + 3, close - open - 3));
}

std::string data_preamble(const ApplicationConfig& config, std::string_view label) {
  return fill_template(config.data_preamble, {{"label", std::string(label)}});
}

PromptBundle assemble(const ApplicationConfig& config, const QACorpus& qa, std::span<const FewShotExample> few_shot,
                      const Entity& entity, const SyntheticText& synthetic) {
  if (synthetic.sentences.empty() || synthetic.joined.empty()) {
    throw Error(Errc::EmptySynthetic, "no synthetic text for '" + entity.entity_id + "'");
  }
  return build(config, qa, few_shot, entity, &synthetic);
}

PromptBundle assemble_control(const ApplicationConfig& config, const QACorpus& qa,
                              std::span<const FewShotExample> few_shot, const Entity& entity) {
  if (few_shot.empty()) throw Error(Errc::NoFewShotToModify, "control condition strips one exemplar; none given");
  return build(config, qa, few_shot, entity, nullptr);
}

std::vector<InspectRow> render_inspectable(const PromptBundle& bundle) {
  std::vector<InspectRow> rows;
  rows.reserve(bundle.messages.size());
  for (const auto& m : bundle.messages) rows.push_back({m.tag, m.role, m.content});
  return rows;
}

PromptBundle from_inspectable(const std::vector<InspectRow>& rows) {
  PromptBundle b;
  for (const auto& r : rows) b.messages.push_back({r.role, r.content, r.tag});
  return b;
}

nlohmann::json to_wire_json(const PromptBundle& bundle) {
  auto j = nlohmann::json::array();
  for (const auto& m : bundle.messages) j.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return j;
}

nlohmann::json to_inspect_json(const PromptBundle& bundle) {
  auto j = nlohmann::json::array();
  for (const auto& r : render_inspectable(bundle)) {
    j.push_back({{"tag", to_string(r.tag)}, {"role", to_string(r.role)}, {"content", r.content}});
  }
  return j;
}

PromptBundle bundle_from_inspect_json(const nlohmann::json& j) {
  std::vector<InspectRow> rows;
  for (const auto& r : j) {
    rows.push_back({tag_from_string(r.at("tag").get<std::string>()), role_from_string(r.at("role").get<std::string>()),
                    r.at("content").get<std::string>()});
  }
  return from_inspectable(rows);
}

std::vector<std::string> check_bundle(const PromptBundle& bundle, bool control) {
  std::vector<std::string> v;
  const auto& ms = bundle.messages;
  if (ms.empty() || ms[0].role != Role::system) v.push_back("first message is not a system message");
  if (std::count_if(ms.begin(), ms.end(), [](const Message& m) { return m.role == Role::system; }) != 1) {
    v.push_back("expected exactly one system message");
  }
  for (const auto& m : ms) {
    if (m.content.empty()) v.push_back("empty message tagged " + std::string(to_string(m.tag)));
  }
  for (Tag t : {Tag::knowledge, Tag::few_shot}) {
    Role expect = Role::user;
    for (const auto& m : ms) {
      if (m.tag != t) continue;
      if (m.role != expect) v.push_back(std::string(to_string(t)) + " messages do not alternate user/assistant");
      expect = expect == Role::user ? Role::assistant : Role::user;
    }
    if (expect != Role::user) v.push_back(std::string(to_string(t)) + " section ends on a user turn");
  }
  const std::size_t data = bundle.count(Tag::data);
  if (control ? data != 0 : data != 1) {
    v.push_back("expected " + std::string(control ? "0" : "1") + " data message, found " + std::to_string(data));
  }
  return v;
}

}  // namespace wordalise
