#include "lomo/corpus.hpp"

#include <cstdio>

#include "lomo/rng.hpp"

namespace lomo {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

bool Instance::is_text_only() const {
  for (const auto& p : parts)
    if (p.kind == PartKind::image) return false;
  return true;
}

std::string Instance::question_text() const {
  std::string out;
  for (const auto& p : parts)
    if (p.kind == PartKind::text) out += p.value;
  return out;
}

bool is_inline_image(std::string_view value) { return value.starts_with("data:"); }

CorpusError::CorpusError(const std::string& what, std::size_t line, std::size_t byte_offset)
    : std::runtime_error(line ? "line " + std::to_string(line) + " (byte " +
                                    std::to_string(byte_offset) + "): " + what
                              : what),
      line_(line),
      byte_offset_(byte_offset) {}

Instance instance_from_json(const json& j) {
  if (!j.is_object()) throw CorpusError("record is not a JSON object");
  auto string_field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw CorpusError(std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
  };
  Instance inst;
  inst.id = string_field("id");
  if (inst.id.empty()) throw CorpusError("empty id");
  inst.answer = string_field("answer");
  auto parts = j.find("parts");
  if (parts == j.end() || !parts->is_array() || parts->empty())
    throw CorpusError("'parts' must be a non-empty array");
  for (const auto& p : *parts) {
    if (!p.is_object()) throw CorpusError("part is not an object");
    auto kind = p.find("kind");
    auto value = p.find("value");
    if (kind == p.end() || !kind->is_string() || value == p.end() || !value->is_string())
      throw CorpusError("part needs string 'kind' and 'value'");
    const auto& k = kind->get_ref<const std::string&>();
    ContentPart part;
    if (k == "text")
      part.kind = PartKind::text;
    else if (k == "image")
      part.kind = PartKind::image;
    else
      throw CorpusError("unknown part kind '" + k + "'");
    part.value = value->get<std::string>();
    if (part.value.empty()) throw CorpusError("empty part value");
    inst.parts.push_back(std::move(part));
  }
  return inst;
}

ordered_json instance_to_json(const Instance& instance) {
  ordered_json j;
  j["id"] = instance.id;
  ordered_json parts = ordered_json::array();
  for (const auto& p : instance.parts)
    parts.push_back({{"kind", p.kind == PartKind::text ? "text" : "image"}, {"value", p.value}});
  j["parts"] = std::move(parts);
  j["answer"] = instance.answer;
  return j;
}

std::string serialize_instance(const Instance& instance) {
  return instance_to_json(instance).dump(-1, ' ', false, json::error_handler_t::replace);
}

InstanceReader::InstanceReader(const fs::path& path, LoadOptions options)
    : path_(path), options_(std::move(options)) {
  if (!fs::exists(path)) throw CorpusError("file not found: " + path.string());
  in_.open(path, std::ios::binary);
  if (!in_) throw CorpusError("cannot open: " + path.string());
  root_ = options_.image_root ? *options_.image_root : fs::absolute(path).parent_path();
}

void InstanceReader::report(std::size_t line, std::size_t offset, const std::string& message) {
  if (!options_.lenient) throw CorpusError(message, line, offset);
  issues_.push_back({line, offset, message});
}

std::optional<Instance> InstanceReader::parse_line(const std::string& line,
                                                   std::size_t line_start) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    const std::size_t col = e.byte > 0 ? e.byte - 1 : 0;
    report(line_no_, line_start + col, std::string("parse error: ") + e.what());
    return std::nullopt;
  }
  Instance inst;
  try {
    inst = instance_from_json(j);
  } catch (const CorpusError& e) {
    report(line_no_, line_start, e.what());
    return std::nullopt;
  }
  if (options_.check_images) {
    for (const auto& p : inst.parts) {
      if (p.kind != PartKind::image || is_inline_image(p.value)) continue;
      const fs::path img = fs::path(p.value).is_absolute() ? fs::path(p.value) : root_ / p.value;
      if (!fs::is_regular_file(img)) {
        report(line_no_, line_start, "image not found: " + p.value);
        return std::nullopt;
      }
    }
  }
  if (!seen_ids_.insert(inst.id).second) {
    report(line_no_, line_start, "duplicate id '" + inst.id + "'");
    return std::nullopt;
  }
  return inst;
}

std::optional<Instance> InstanceReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    const std::size_t start = offset_;
    offset_ += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (auto inst = parse_line(line, start)) return inst;
  }
  return std::nullopt;
}

std::vector<Instance> load_instances(const fs::path& path, LoadOptions options,
                                     std::vector<LoadIssue>* issues) {
  InstanceReader reader(path, std::move(options));
  std::vector<Instance> out;
  while (auto inst = reader.next()) out.push_back(std::move(*inst));
  if (issues) *issues = reader.issues();
  return out;
}

CorpusWriter::CorpusWriter(const fs::path& path) : path_(path) {
  root_ = fs::absolute(path).parent_path();
  std::error_code ec;
  fs::create_directories(root_, ec);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw CorpusError("cannot open for writing: " + path.string());
}

void CorpusWriter::write(const Instance& instance) {
  const std::string line = serialize_instance(instance);
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  if (!out_) throw CorpusError("write failed: " + path_.string());
  ++written_;
}

void CorpusWriter::close() {
  std::lock_guard lock(mu_);
  if (out_.is_open()) {
    out_.flush();
    if (!out_) throw CorpusError("flush failed: " + path_.string());
    out_.close();
  }
}

std::string_view to_string(RecordAction action) {
  return action == RecordAction::rewritten ? "rewritten" : "passthrough";
}

namespace {

RecordAction action_from_string(const std::string& s) {
  if (s == "rewritten") return RecordAction::rewritten;
  if (s == "passthrough") return RecordAction::passthrough;
  throw CorpusError("unknown record action '" + s + "'");
}

}  // namespace

ordered_json manifest_to_json(const CurationManifest& m) {
  ordered_json j;
  j["operation"] = m.operation;
  j["source_path"] = m.source_path;
  j["seed"] = m.seed;
  j["rewrite_ratio"] = m.rewrite_ratio;
  j["position_mode"] = m.position_mode;
  j["counts"] = {{"total", m.counts.total},
                 {"rewritten", m.counts.rewritten},
                 {"text_only_kept", m.counts.text_only_kept},
                 {"image_bearing_original", m.counts.image_bearing_original}};
  ordered_json records = ordered_json::array();
  for (const auto& r : m.per_instance_records) {
    ordered_json rec;
    rec["id"] = r.id;
    rec["action"] = to_string(r.action);
    rec["image_paths"] = r.image_paths;
    if (!r.spans.empty()) rec["spans"] = r.spans;
    records.push_back(std::move(rec));
  }
  j["per_instance_records"] = std::move(records);
  ordered_json bad = ordered_json::array();
  for (const auto& issue : m.malformed_lines)
    bad.push_back({{"line", issue.line}, {"byte_offset", issue.byte_offset},
                   {"message", issue.message}});
  j["malformed_lines"] = std::move(bad);
  if (!m.extra.empty()) j["extra"] = m.extra;
  return j;
}

CurationManifest manifest_from_json(const json& j) {
  CurationManifest m;
  try {
    m.operation = j.value("operation", std::string("curate"));
    m.source_path = j.at("source_path").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.rewrite_ratio = j.at("rewrite_ratio").get<double>();
    m.position_mode = j.at("position_mode").get<std::string>();
    const auto& c = j.at("counts");
    m.counts.total = c.at("total").get<std::uint64_t>();
    m.counts.rewritten = c.at("rewritten").get<std::uint64_t>();
    m.counts.text_only_kept = c.at("text_only_kept").get<std::uint64_t>();
    m.counts.image_bearing_original = c.at("image_bearing_original").get<std::uint64_t>();
    for (const auto& rec : j.at("per_instance_records")) {
      InstanceRecord r;
      r.id = rec.at("id").get<std::string>();
      r.action = action_from_string(rec.at("action").get<std::string>());
      r.image_paths = rec.at("image_paths").get<std::vector<std::string>>();
      if (auto s = rec.find("spans"); s != rec.end())
        for (const auto& span : *s) r.spans.push_back(ordered_json(span));
      m.per_instance_records.push_back(std::move(r));
    }
    if (auto bad = j.find("malformed_lines"); bad != j.end())
      for (const auto& b : *bad)
        m.malformed_lines.push_back({b.at("line").get<std::size_t>(),
                                     b.at("byte_offset").get<std::size_t>(),
                                     b.at("message").get<std::string>()});
    if (auto extra = j.find("extra"); extra != j.end()) m.extra = ordered_json(*extra);
  } catch (const json::exception& e) {
    throw CorpusError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const fs::path& path, const CurationManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot open for writing: " + path.string());
  out << manifest_to_json(manifest).dump(2, ' ', false, json::error_handler_t::replace) << '\n';
  if (!out) throw CorpusError("write failed: " + path.string());
}

CurationManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("manifest not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("manifest parse error: ") + e.what());
  }
  return manifest_from_json(j);
}

namespace {

fs::path with_suffix(const fs::path& corpus, const std::string& suffix) {
  fs::path p = corpus;
  p.replace_filename(corpus.stem().string() + suffix);
  return p;
}

}  // namespace

fs::path manifest_path_for(const fs::path& corpus) { return with_suffix(corpus, ".manifest.json"); }
fs::path stats_path_for(const fs::path& corpus) { return with_suffix(corpus, ".stats.json"); }
fs::path image_dir_for(const fs::path& corpus) { return with_suffix(corpus, "_images"); }

std::string image_file_name(std::string_view instance_id, int span_index) {
  std::string safe;
  bool changed = false;
  for (char c : instance_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    safe += ok ? c : '_';
    changed |= !ok;
  }
  if (safe.size() > 96) {
    safe.resize(96);
    changed = true;
  }
  if (safe.empty() || safe[0] == '.') {
    safe.insert(0, "i");
    changed = true;
  }
  if (changed) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "-%016llx",
                  static_cast<unsigned long long>(fnv1a64(instance_id)));
    safe += buf;
  }
  return safe + "_s" + std::to_string(span_index) + ".png";
}

InstanceRecord emit_interleaved(const Instance& instance, CorpusWriter& writer,
                                RecordAction action) {
  InstanceRecord record;
  record.id = instance.id;
  record.action = action;
  Instance out = instance;
  for (auto& part : out.parts) {
    if (part.kind != PartKind::image || is_inline_image(part.value)) continue;
    const fs::path src = fs::absolute(part.value);
    if (!fs::is_regular_file(src))
      throw CorpusError("image not materialized: " + part.value);
    part.value = fs::relative(src, writer.root()).generic_string();
    if (action == RecordAction::rewritten) record.image_paths.push_back(part.value);
  }
  writer.write(out);
  return record;
}

}  // namespace lomo
