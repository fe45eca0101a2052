#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace factflow::agent {

class Transport;

// One field of a worker's input or output document.
struct FieldSpec {
  std::string name;
  std::string type;  // string, integer, number, boolean, object, array
  std::string description;
  bool required = true;
  std::vector<std::string> enum_values;  // strings only
  std::string item_type;                 // arrays of scalars
  std::vector<FieldSpec> item_fields;    // arrays of objects
};

using Schema = std::vector<FieldSpec>;

// Error strings such as `missing required field "facts[0].content"`.
std::vector<std::string> validate(const Schema& schema, const nlohmann::json& doc);
std::string describe_schema(const Schema& schema);

struct FewShot {
  nlohmann::json input;
  nlohmann::json output;
};

struct WorkerProfile {
  std::string name;
  std::string overall_goal;
  std::string specific_role;
  std::string persona;
  Schema input_schema;
  Schema output_schema;
  std::vector<FewShot> few_shot_examples;
  std::vector<std::string> knowledge_base_refs;  // asset ids
  std::vector<std::string> instructions;
};

// Throws Error(schema) when a schema is empty or a few-shot example does not
// validate against both schemas.
WorkerProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const WorkerProfile& profile);
// Loads assets/profiles/<name>.json.
const WorkerProfile& builtin_profile(std::string_view name);

// Goal, role, persona, knowledge base, instructions, examples (omitted when
// there are none), output format, then the payload. Throws Error(schema)
// naming every offending field when the payload does not match.
std::string render_prompt(const WorkerProfile& profile, const nlohmann::json& payload);

// JSON from the first fenced block that parses, else from the whole text.
std::optional<nlohmann::json> extract_json(std::string_view text);

std::string request_digest(std::string_view prompt);

class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(std::filesystem::path file);

  void append(nlohmann::json entry);
  std::vector<nlohmann::json> entries() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  std::vector<nlohmann::json> entries_;
};

struct InvokeOptions {
  int max_repairs = 2;
  // Semantic checks run after the schema passes; their messages feed the
  // same repair prompt.
  std::function<std::vector<std::string>(const nlohmann::json&)> check;
  RunLog* log = nullptr;
  nlohmann::json log_extra;  // merged into the run-log entry
};

struct Invocation {
  nlohmann::json output;
  std::string raw;
  std::string digest;  // of the first prompt
  int repair_count = 0;
};

// Throws Error(worker) carrying the last raw reply once the repairs are spent;
// transport errors propagate unchanged.
Invocation invoke(const WorkerProfile& profile, const nlohmann::json& payload, Transport& transport,
                  const InvokeOptions& options = {});

// The prompt sent for a repair round.
std::string repair_prompt(const std::string& base_prompt, const std::string& raw,
                          const std::vector<std::string>& problems);

// Content-addressed files under <workspace>/blocks/.
class BlockStore {
 public:
  explicit BlockStore(std::filesystem::path workspace);

  // Returns "blocks/<sha256>"; identical bytes give the same path.
  std::string put(std::string_view bytes);
  // Throws Error(not_found) for unknown or malformed paths.
  std::string get(std::string_view path) const;
  bool contains(std::string_view path) const;

 private:
  std::filesystem::path root_;
};

struct Envelope {
  std::string id;
  std::string sender;
  std::string recipient;
  std::string created_at;  // RFC 3339, UTC
  nlohmann::json payload;
  std::vector<std::string> block_refs;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// Validates the payload against the recipient's input schema and checks that
// every block reference resolves.
Envelope make_envelope(std::string id, std::string sender, const WorkerProfile& recipient, nlohmann::json payload,
                       std::vector<std::string> block_refs, const BlockStore* store, std::string created_at);
nlohmann::json to_json(const Envelope& e);
Envelope envelope_from_json(const nlohmann::json& j);

std::string utc_timestamp(std::chrono::system_clock::time_point t);

}  // namespace factflow::agent
