#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <stdlib.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "lomo/localizer.hpp"
#include "lomo/renderer.hpp"

extern char** environ;

namespace lomo {

namespace fs = std::filesystem;

std::string_view to_string(LatexFailureKind kind) {
  switch (kind) {
    case LatexFailureKind::unavailable: return "renderer unavailable";
    case LatexFailureKind::spawn_failed: return "spawn failed";
    case LatexFailureKind::nonzero_exit: return "nonzero exit";
    case LatexFailureKind::timeout: return "timeout";
    case LatexFailureKind::missing_output: return "missing output";
    case LatexFailureKind::undecodable_output: return "undecodable output";
    case LatexFailureKind::io_error: return "i/o error";
  }
  return "unknown";
}

namespace {

std::string escape_text(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      out += c;
      out += s[++i];
      continue;
    }
    switch (c) {
      case '&': case '%': case '#': case '_': case '$': case '{': case '}':
        out += '\\';
        out += c;
        break;
      case '~': out += "\\textasciitilde{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '\n': out += "\\\\\n"; break;
      default: out += c;
    }
  }
  return out;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "lomo-latex-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

class GateHold {
 public:
  explicit GateHold(ProcessGate* gate) : gate_(gate) {
    if (gate_) gate_->acquire();
  }
  ~GateHold() {
    if (gate_) gate_->release();
  }
  GateHold(const GateHold&) = delete;
  GateHold& operator=(const GateHold&) = delete;

 private:
  ProcessGate* gate_;
};

struct RunOutcome {
  bool spawned = false;
  bool timed_out = false;
  int exit_code = -1;
};

RunOutcome run_shell(const std::string& command, double timeout_seconds) {
  RunOutcome result;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  std::string sh = "/bin/sh", flag = "-c", cmd = command;
  char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) return result;
  result.spawned = true;

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds);
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) {
      result.exit_code = -1;
      return result;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      result.timed_out = true;
      return result;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

LatexResult failed(LatexFailureKind kind, std::string detail = {}) {
  LatexResult r;
  r.failure = LatexFailure{kind, std::move(detail)};
  return r;
}

}  // namespace

std::string latex_document(std::string_view span, const RenderConfig& config) {
  std::string body;
  for (const auto& block : chunk_formula_aware(span).blocks)
    body += block.kind == BlockKind::formula ? block.content : escape_text(block.content);
  const int script = config.math_font_size * 7 / 10;
  const int scriptscript = config.math_font_size / 2;
  std::string doc;
  doc += "\\documentclass[border=2pt,varwidth=" + std::to_string(config.max_line_width) +
         "pt]{standalone}\n";
  doc += "\\usepackage[T1]{fontenc}\n\\usepackage{lmodern}\n";
  doc += "\\usepackage{amsmath,amssymb}\n";
  doc += "\\DeclareMathSizes{" + std::to_string(config.font_size) + "}{" +
         std::to_string(config.math_font_size) + "}{" + std::to_string(script) + "}{" +
         std::to_string(scriptscript) + "}\n";
  doc += "\\begin{document}\n";
  doc += "\\fontsize{" + std::to_string(config.font_size) + "}{" +
         std::to_string(config.line_height) + "}\\selectfont\n";
  doc += body;
  doc += "\n\\end{document}\n";
  return doc;
}

LatexResult render_latex(std::string_view span, const RenderConfig& config, ProcessGate* gate) {
  if (!config.latex_command_template || config.latex_command_template->empty())
    return failed(LatexFailureKind::unavailable);

  std::optional<TempDir> dir;
  try {
    dir.emplace();
  } catch (const std::exception& e) {
    return failed(LatexFailureKind::io_error, e.what());
  }
  const fs::path tex = dir->path() / "span.tex";
  const fs::path png = dir->path() / "span.png";
  {
    std::ofstream out(tex, std::ios::binary);
    out << latex_document(span, config);
    if (!out) return failed(LatexFailureKind::io_error, "cannot write " + tex.string());
  }
  std::string command = *config.latex_command_template;
  replace_all(command, "{input_tex}", shell_quote(tex.string()));
  replace_all(command, "{output_png}", shell_quote(png.string()));
  command = "cd " + shell_quote(dir->path().string()) + " && " + command;

  RunOutcome run;
  {
    GateHold hold(gate);
    run = run_shell(command, config.latex_timeout_seconds);
  }
  if (!run.spawned) return failed(LatexFailureKind::spawn_failed);
  if (run.timed_out) return failed(LatexFailureKind::timeout);
  if (run.exit_code != 0)
    return failed(LatexFailureKind::nonzero_exit, "exit code " + std::to_string(run.exit_code));
  if (!fs::is_regular_file(png)) return failed(LatexFailureKind::missing_output);

  LatexResult r;
  try {
    RenderedCarrier carrier;
    carrier.image = read_png(png).image;
    if (carrier.image.empty()) return failed(LatexFailureKind::undecodable_output, "empty image");
    carrier.route = Route::latex;
    carrier.source_span = std::string(span);
    r.carrier = std::move(carrier);
  } catch (const ImageError& e) {
    return failed(LatexFailureKind::undecodable_output, e.what());
  }
  return r;
}

}  // namespace lomo
