#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace lomo {

enum class PartKind { text, image };

struct ContentPart {
  PartKind kind = PartKind::text;
  std::string value;  // text content, or image path relative to the corpus root

  static ContentPart text(std::string v) { return {PartKind::text, std::move(v)}; }
  static ContentPart image(std::string v) { return {PartKind::image, std::move(v)}; }

  friend bool operator==(const ContentPart&, const ContentPart&) = default;
};

// One supervision pair: question parts x and ground-truth answer a.
struct Instance {
  std::string id;
  std::vector<ContentPart> parts;
  std::string answer;

  bool is_text_only() const;
  // Concatenation of the text parts in order.
  std::string question_text() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Inline image payloads ("data:" URIs) are accepted without a file check.
bool is_inline_image(std::string_view value);

class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& what, std::size_t line = 0, std::size_t byte_offset = 0);

  std::size_t line() const { return line_; }
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t line_;
  std::size_t byte_offset_;
};

// One JSON object per line: {"id", "parts": [{"kind", "value"}], "answer"}.
// Throws CorpusError (line 0) on schema violations.
Instance instance_from_json(const nlohmann::json& j);
nlohmann::ordered_json instance_to_json(const Instance& instance);
std::string serialize_instance(const Instance& instance);

struct LoadOptions {
  // Lenient mode records malformed lines and keeps going; strict mode throws
  // on the first one.
  bool lenient = false;
  bool check_images = true;
  // Root for relative image paths; defaults to the corpus file's directory.
  std::optional<std::filesystem::path> image_root;
};

struct LoadIssue {
  std::size_t line = 0;
  std::size_t byte_offset = 0;  // from the start of the file
  std::string message;
};

// Streaming reader; memory use does not grow with corpus size apart from the
// id set used for duplicate detection.
class InstanceReader {
 public:
  explicit InstanceReader(const std::filesystem::path& path, LoadOptions options = {});

  // Next well-formed instance in file order, or nullopt at end of file.
  std::optional<Instance> next();

  const std::vector<LoadIssue>& issues() const { return issues_; }
  const std::filesystem::path& root() const { return root_; }
  std::size_t lines_read() const { return line_no_; }

 private:
  std::optional<Instance> parse_line(const std::string& line, std::size_t line_start);
  void report(std::size_t line, std::size_t offset, const std::string& message);

  std::filesystem::path path_;
  std::filesystem::path root_;
  LoadOptions options_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t offset_ = 0;
  std::unordered_set<std::string> seen_ids_;
  std::vector<LoadIssue> issues_;
};

// Reads the whole corpus; convenience for tests and small files.
std::vector<Instance> load_instances(const std::filesystem::path& path,
                                     LoadOptions options = {},
                                     std::vector<LoadIssue>* issues = nullptr);

// Appends instances to a JSON Lines file; write() is safe to call from
// several threads.
class CorpusWriter {
 public:
  explicit CorpusWriter(const std::filesystem::path& path);

  void write(const Instance& instance);
  void close();

  const std::filesystem::path& path() const { return path_; }
  // Directory that relative image paths are resolved against.
  const std::filesystem::path& root() const { return root_; }
  std::size_t written() const { return written_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path root_;
  std::ofstream out_;
  std::mutex mu_;
  std::size_t written_ = 0;
};

enum class RecordAction { rewritten, passthrough };

std::string_view to_string(RecordAction action);

struct InstanceRecord {
  std::string id;
  RecordAction action = RecordAction::passthrough;
  std::vector<std::string> image_paths;  // new images only, relative to the root
  // Per-rendered-span provenance (source span, route, distortion); free form.
  std::vector<nlohmann::ordered_json> spans;
};

struct ManifestCounts {
  std::uint64_t total = 0;
  std::uint64_t rewritten = 0;
  std::uint64_t text_only_kept = 0;
  std::uint64_t image_bearing_original = 0;

  bool identity_holds() const {
    return rewritten + text_only_kept + image_bearing_original == total;
  }
};

struct CurationManifest {
  std::string source_path;
  std::uint64_t seed = 0;
  double rewrite_ratio = 0.0;
  std::string position_mode;
  std::string operation = "curate";
  ManifestCounts counts;
  std::vector<InstanceRecord> per_instance_records;
  std::vector<LoadIssue> malformed_lines;
  // Operation-specific details (target ratio, dropped counts, ...).
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

nlohmann::ordered_json manifest_to_json(const CurationManifest& manifest);
CurationManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& path, const CurationManifest& manifest);
CurationManifest read_manifest(const std::filesystem::path& path);

// Conventional sidecar locations for an output corpus "out.jsonl":
// out.manifest.json, out.stats.json and out_images/.
std::filesystem::path manifest_path_for(const std::filesystem::path& corpus);
std::filesystem::path stats_path_for(const std::filesystem::path& corpus);
std::filesystem::path image_dir_for(const std::filesystem::path& corpus);

// File-name-safe image name keyed by instance id and span index.
std::string image_file_name(std::string_view instance_id, int span_index);

// Writes `instance` (image parts holding paths that exist on disk, absolute
// or relative to the working directory) with image paths rewritten relative
// to the writer's root, and returns its manifest record.
InstanceRecord emit_interleaved(const Instance& instance, CorpusWriter& writer,
                                RecordAction action = RecordAction::rewritten);

}  // namespace lomo
