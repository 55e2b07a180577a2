#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wordalise/ingest.hpp"
#include "wordalise/lexicon.hpp"

namespace wordalise {

enum class Role { system, user, assistant };

/// Which construction step produced a message.
enum class Tag {
  system,        // who it is
  knowledge,     // what it knows (QA pairs, retrieved context)
  instructions,  // how to answer: directives
  few_shot,      // how to answer: exemplars
  data,          // what data to use: the synthetic text
  subject,       // control condition: names the entity without data
  history,       // chat transcript
  query,         // chat / reconstruction request
};

struct Message {
  Role role = Role::user;
  std::string content;
  Tag tag = Tag::query;

  bool operator==(const Message&) const = default;
};

struct PromptBundle {
  std::vector<Message> messages;
  std::vector<std::string> warnings;  // e.g. EmptyFewShot; not part of the wire format

  std::size_t count(Tag tag) const;
};

inline constexpr std::string_view kDataLead = "Now do the same thing with the following: ";
inline constexpr std::string_view kControlSentence =
    "If no data is provided answer anyway, using your prior statistical knowledge.";

std::string_view to_string(Role r);
std::string_view to_string(Tag t);
Role role_from_string(std::string_view s);
Tag tag_from_string(std::string_view s);

/// "Now do the same thing with the following: ```{body}```".
std::string wrap_data(std::string_view body);

/// Text between the first pair of ``` fences, if any.
std::optional<std::string> fenced_body(std::string_view text);

/// Preamble naming the entity, e.g. "Here is a statistical description of Peru."
std::string data_preamble(const ApplicationConfig& config, std::string_view label);

/// system -> knowledge pairs -> instructions -> few-shot pairs -> data message.
PromptBundle assemble(const ApplicationConfig& config, const QACorpus& qa, std::span<const FewShotExample> few_shot,
                      const Entity& entity, const SyntheticText& synthetic);

/// Same layout with the data removed, the prior-knowledge sentence added to the
/// instructions, and the first exemplar's description stripped.
PromptBundle assemble_control(const ApplicationConfig& config, const QACorpus& qa,
                              std::span<const FewShotExample> few_shot, const Entity& entity);

struct InspectRow {
  Tag tag;
  Role role;
  std::string content;

  bool operator==(const InspectRow&) const = default;
};

std::vector<InspectRow> render_inspectable(const PromptBundle& bundle);
PromptBundle from_inspectable(const std::vector<InspectRow>& rows);

/// Provider wire order: [{role, content}, ...].
nlohmann::json to_wire_json(const PromptBundle& bundle);
/// Inspector form: [{tag, role, content}, ...].
nlohmann::json to_inspect_json(const PromptBundle& bundle);
PromptBundle bundle_from_inspect_json(const nlohmann::json& j);

/// Structural invariants; returns human-readable violations (empty when sound).
std::vector<std::string> check_bundle(const PromptBundle& bundle, bool control);

}  // namespace wordalise
