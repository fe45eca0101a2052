#include "factflow/agent.hpp"

#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "factflow/assets.hpp"
#include "factflow/error.hpp"
#include "factflow/text.hpp"
#include "factflow/transport.hpp"

namespace factflow::agent {

using nlohmann::json;

namespace {

bool type_matches(const std::string& type, const json& v) {
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  return false;
}

void validate_into(const Schema& schema, const json& doc, const std::string& prefix,
                   std::vector<std::string>& out) {
  if (!doc.is_object()) {
    out.push_back(prefix.empty() ? "document is not a JSON object" : fmt::format("\"{}\" is not an object", prefix));
    return;
  }
  for (const auto& f : schema) {
    std::string path = prefix.empty() ? f.name : prefix + "." + f.name;
    auto it = doc.find(f.name);
    if (it == doc.end() || it->is_null()) {
      if (f.required) out.push_back(fmt::format("missing required field \"{}\"", path));
      continue;
    }
    if (!type_matches(f.type, *it)) {
      out.push_back(fmt::format("field \"{}\" must be of type {}", path, f.type));
      continue;
    }
    if (!f.enum_values.empty() && it->is_string()) {
      const auto& s = it->get_ref<const std::string&>();
      bool ok = false;
      for (const auto& e : f.enum_values) ok = ok || text::iequals(e, s);
      if (!ok) out.push_back(fmt::format("field \"{}\" must be one of: {}", path, text::join(f.enum_values, ", ")));
    }
    if (f.type == "array") {
      for (std::size_t i = 0; i < it->size(); ++i) {
        std::string ip = fmt::format("{}[{}]", path, i);
        const json& item = (*it)[i];
        if (!f.item_fields.empty()) {
          validate_into(f.item_fields, item, ip, out);
        } else if (!f.item_type.empty() && !type_matches(f.item_type, item)) {
          out.push_back(fmt::format("field \"{}\" must be of type {}", ip, f.item_type));
        }
      }
    }
  }
}

void describe_into(const Schema& schema, int depth, std::string& out) {
  std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& f : schema) {
    std::string type = f.type;
    if (f.type == "array") type = fmt::format("array of {}", f.item_fields.empty() ? f.item_type : "objects");
    out += fmt::format("{}- {} ({}{}): {}", indent, f.name, type, f.required ? "" : ", optional", f.description);
    if (!f.enum_values.empty()) out += fmt::format(" One of: {}.", text::join(f.enum_values, ", "));
    out += '\n';
    if (!f.item_fields.empty()) describe_into(f.item_fields, depth + 1, out);
  }
}

FieldSpec field_from_json(const json& j) {
  FieldSpec f;
  if (!j.is_object() || !j.contains("name") || !j.contains("type"))
    throw Error(ErrorKind::schema, "schema field needs a name and a type");
  f.name = j.at("name").get<std::string>();
  f.type = j.at("type").get<std::string>();
  f.description = j.value("description", "");
  f.required = j.value("required", true);
  if (j.contains("enum")) f.enum_values = j.at("enum").get<std::vector<std::string>>();
  if (j.contains("items")) {
    const json& items = j.at("items");
    if (items.is_string()) {
      f.item_type = items.get<std::string>();
    } else {
      for (const auto& sub : items) f.item_fields.push_back(field_from_json(sub));
      f.item_type = "object";
    }
  }
  static const char* kTypes[] = {"string", "integer", "number", "boolean", "object", "array"};
  bool known = false;
  for (auto t : kTypes) known = known || f.type == t;
  if (!known) throw Error(ErrorKind::schema, fmt::format("field \"{}\" has unknown type \"{}\"", f.name, f.type));
  return f;
}

json field_to_json(const FieldSpec& f) {
  json j{{"name", f.name}, {"type", f.type}, {"description", f.description}};
  if (!f.required) j["required"] = false;
  if (!f.enum_values.empty()) j["enum"] = f.enum_values;
  if (!f.item_fields.empty()) {
    json items = json::array();
    for (const auto& sub : f.item_fields) items.push_back(field_to_json(sub));
    j["items"] = items;
  } else if (!f.item_type.empty()) {
    j["items"] = f.item_type;
  }
  return j;
}

Schema schema_from_json(const json& j) {
  Schema s;
  for (const auto& f : j) s.push_back(field_from_json(f));
  return s;
}

json schema_to_json(const Schema& s) {
  json j = json::array();
  for (const auto& f : s) j.push_back(field_to_json(f));
  return j;
}

std::string fenced(const json& j) { return "```json\n" + j.dump(2) + "\n```\n"; }

}  // namespace

std::vector<std::string> validate(const Schema& schema, const json& doc) {
  std::vector<std::string> out;
  validate_into(schema, doc, "", out);
  return out;
}

std::string describe_schema(const Schema& schema) {
  std::string out;
  describe_into(schema, 0, out);
  return out;
}

WorkerProfile profile_from_json(const json& doc) {
  WorkerProfile p;
  try {
    p.name = doc.at("name").get<std::string>();
    p.overall_goal = doc.at("overall_goal").get<std::string>();
    p.specific_role = doc.at("specific_role").get<std::string>();
    p.persona = doc.at("persona").get<std::string>();
    p.input_schema = schema_from_json(doc.at("input_schema"));
    p.output_schema = schema_from_json(doc.at("output_schema"));
    for (const auto& ex : doc.value("few_shot_examples", json::array()))
      p.few_shot_examples.push_back({ex.at("input"), ex.at("output")});
    p.knowledge_base_refs = doc.value("knowledge_base_refs", std::vector<std::string>{});
    p.instructions = doc.value("instructions", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("malformed worker profile: {}", e.what()));
  }
  if (p.input_schema.empty() || p.output_schema.empty())
    throw Error(ErrorKind::schema, fmt::format("profile \"{}\" has an empty schema", p.name));
  for (std::size_t i = 0; i < p.few_shot_examples.size(); ++i) {
    auto in = validate(p.input_schema, p.few_shot_examples[i].input);
    auto out = validate(p.output_schema, p.few_shot_examples[i].output);
    in.insert(in.end(), out.begin(), out.end());
    if (!in.empty())
      throw Error(ErrorKind::schema,
                  fmt::format("profile \"{}\" example {} does not validate: {}", p.name, i + 1, text::join(in, "; ")));
  }
  return p;
}

json to_json(const WorkerProfile& p) {
  json examples = json::array();
  for (const auto& ex : p.few_shot_examples) examples.push_back({{"input", ex.input}, {"output", ex.output}});
  return {{"name", p.name},
          {"overall_goal", p.overall_goal},
          {"specific_role", p.specific_role},
          {"persona", p.persona},
          {"input_schema", schema_to_json(p.input_schema)},
          {"output_schema", schema_to_json(p.output_schema)},
          {"few_shot_examples", examples},
          {"knowledge_base_refs", p.knowledge_base_refs},
          {"instructions", p.instructions}};
}

const WorkerProfile& builtin_profile(std::string_view name) {
  static std::mutex mu;
  static std::map<std::string, WorkerProfile, std::less<>> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  auto text = assets::get(fmt::format("profiles/{}.json", name));
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("profile \"{}\" is not valid JSON: {}", name, e.what()));
  }
  for (const auto& ref : doc.value("knowledge_base_refs", std::vector<std::string>{})) assets::get(ref);
  return cache.emplace(std::string(name), profile_from_json(doc)).first->second;
}

std::string render_prompt(const WorkerProfile& p, const json& payload) {
  auto problems = validate(p.input_schema, payload);
  if (!problems.empty())
    throw Error(ErrorKind::schema, fmt::format("{} input does not match its schema: {}", p.name, text::join(problems, "; ")));

  std::string out = fmt::format("# {} worker\n\n", p.name);
  out += "## Overall goal\n" + p.overall_goal + "\n\n";
  out += "## Role\n" + p.specific_role + "\n\n";
  out += "## Persona\n" + p.persona + "\n\n";
  if (!p.knowledge_base_refs.empty()) {
    out += "## Knowledge base\n";
    for (const auto& ref : p.knowledge_base_refs) {
      std::string body = text::trim(assets::get(ref));
      out += body + "\n\n";
    }
  }
  if (!p.instructions.empty()) {
    out += "## Instructions\n";
    for (std::size_t i = 0; i < p.instructions.size(); ++i) out += fmt::format("{}. {}\n", i + 1, p.instructions[i]);
    out += '\n';
  }
  if (!p.few_shot_examples.empty()) {
    out += "## Examples\n";
    for (std::size_t i = 0; i < p.few_shot_examples.size(); ++i) {
      out += fmt::format("### Example {}\nInput:\n", i + 1);
      out += fenced(p.few_shot_examples[i].input);
      out += "Output:\n";
      out += fenced(p.few_shot_examples[i].output);
    }
    out += '\n';
  }
  out += "## Output format\nReply with one JSON object in a ```json fenced block, with these fields:\n";
  out += describe_schema(p.output_schema);
  out += "\n## Input\n";
  out += fenced(payload);
  return out;
}

std::optional<json> extract_json(std::string_view t) {
  std::size_t pos = 0;
  while ((pos = t.find("```", pos)) != std::string_view::npos) {
    std::size_t line_end = t.find('\n', pos);
    if (line_end == std::string_view::npos) break;
    std::size_t close = t.find("```", line_end + 1);
    if (close == std::string_view::npos) break;
    auto body = t.substr(line_end + 1, close - line_end - 1);
    auto parsed = json::parse(body, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    pos = close + 3;
  }
  auto parsed = json::parse(t, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  return std::nullopt;
}

std::string request_digest(std::string_view prompt) { return text::sha256_hex(prompt); }

RunLog::RunLog(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
}

void RunLog::append(json entry) {
  std::lock_guard lock(mu_);
  if (file_) {
    std::ofstream out(*file_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write run log {}", file_->string()));
    out << entry.dump() << '\n';
  }
  entries_.push_back(std::move(entry));
}

std::vector<json> RunLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::string repair_prompt(const std::string& base, const std::string& raw, const std::vector<std::string>& problems) {
  std::string out = base;
  out += "\n## Previous reply\n";
  out += raw;
  if (raw.empty() || raw.back() != '\n') out += '\n';
  out += "\n## Problems\nThe previous reply was rejected. Fix these problems and reply again:\n";
  for (const auto& p : problems) out += "- " + p + "\n";
  return out;
}

Invocation invoke(const WorkerProfile& profile, const json& payload, Transport& transport,
                  const InvokeOptions& options) {
  const std::string base = render_prompt(profile, payload);
  Invocation result;
  result.digest = request_digest(base);
  std::string prompt = base;
  auto started = std::chrono::steady_clock::now();

  auto log = [&](std::string_view status, int attempts) {
    if (!options.log) return;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    json entry{{"worker", profile.name},
               {"digest", result.digest},
               {"repair_count", result.repair_count},
               {"attempts", attempts},
               {"latency_ms", ms.count()},
               {"transport", std::string(transport.mode())},
               {"status", status}};
    if (options.log_extra.is_object()) entry.update(options.log_extra);
    options.log->append(std::move(entry));
  };

  for (int attempt = 0;; ++attempt) {
    try {
      result.raw = transport.complete(prompt);
    } catch (const Error&) {
      log("transport_error", attempt + 1);
      throw;
    }
    std::vector<std::string> problems;
    auto parsed = extract_json(result.raw);
    if (!parsed) {
      problems.push_back("reply contains no parseable JSON object");
    } else {
      problems = validate(profile.output_schema, *parsed);
      if (problems.empty() && options.check) problems = options.check(*parsed);
    }
    if (problems.empty()) {
      result.output = std::move(*parsed);
      result.repair_count = attempt;
      log("ok", attempt + 1);
      return result;
    }
    if (attempt >= options.max_repairs) {
      result.repair_count = attempt;
      log("failed", attempt + 1);
      throw Error(ErrorKind::worker,
                  fmt::format("{} reply unusable after {} repairs: {}", profile.name, attempt, text::join(problems, "; ")),
                  result.raw);
    }
    prompt = repair_prompt(base, result.raw, problems);
  }
}

BlockStore::BlockStore(std::filesystem::path workspace) : root_(std::move(workspace) / "blocks") {}

namespace {

bool valid_block_path(std::string_view path) {
  if (path.size() != 7 + 64 || path.substr(0, 7) != "blocks/") return false;
  for (char c : path.substr(7))
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

}  // namespace

std::string BlockStore::put(std::string_view bytes) {
  std::string digest = text::sha256_hex(bytes);
  auto target = root_ / digest;
  std::error_code ec;
  if (std::filesystem::exists(target, ec)) return "blocks/" + digest;
  std::filesystem::create_directories(root_);
  // Unique temp name per writer; the rename makes concurrent puts idempotent.
  static std::atomic<unsigned> counter{0};
  auto tmp = root_ / fmt::format(".{}.{}.tmp", digest, counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write block {}", tmp.string()));
  }
  std::filesystem::rename(tmp, target);
  return "blocks/" + digest;
}

bool BlockStore::contains(std::string_view path) const {
  if (!valid_block_path(path)) return false;
  std::error_code ec;
  return std::filesystem::is_regular_file(root_ / std::string(path.substr(7)), ec);
}

std::string BlockStore::get(std::string_view path) const {
  if (!contains(path)) throw Error(ErrorKind::not_found, fmt::format("no block at \"{}\"", path));
  std::ifstream in(root_ / std::string(path.substr(7)), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Envelope make_envelope(std::string id, std::string sender, const WorkerProfile& recipient, json payload,
                       std::vector<std::string> block_refs, const BlockStore* store, std::string created_at) {
  auto problems = validate(recipient.input_schema, payload);
  if (!problems.empty())
    throw Error(ErrorKind::schema,
                fmt::format("envelope for {} does not validate: {}", recipient.name, text::join(problems, "; ")));
  for (const auto& ref : block_refs) {
    if (!store || !store->contains(ref)) throw Error(ErrorKind::not_found, fmt::format("no block at \"{}\"", ref));
  }
  return {std::move(id), std::move(sender), recipient.name, std::move(created_at), std::move(payload),
          std::move(block_refs)};
}

json to_json(const Envelope& e) {
  return {{"id", e.id},
          {"sender", e.sender},
          {"recipient", e.recipient},
          {"created_at", e.created_at},
          {"payload", e.payload},
          {"block_refs", e.block_refs}};
}

Envelope envelope_from_json(const json& j) {
  try {
    return {j.at("id").get<std::string>(),
            j.at("sender").get<std::string>(),
            j.at("recipient").get<std::string>(),
            j.at("created_at").get<std::string>(),
            j.at("payload"),
            j.at("block_refs").get<std::vector<std::string>>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("malformed envelope: {}", e.what()));
  }
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                     tm.tm_min, tm.tm_sec);
}

}  // namespace factflow::agent
