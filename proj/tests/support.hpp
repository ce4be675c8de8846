#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "lomo/corpus.hpp"
#include "lomo/image.hpp"

namespace lomo::testing {

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lomo-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

// A multi-sentence question; every fourth one carries inline math.
inline std::string long_question(int i) {
  std::string q = "Question " + std::to_string(i) + " starts with some context. ";
  q += "It then adds a detail about item " + std::to_string(i * 7 % 13) + ". ";
  if (i % 4 == 0) q += "Given $x_" + std::to_string(i % 10) + "^2 + y = " + std::to_string(i) + "$ holds, ";
  q += "we consider what follows next. A fourth sentence is here! Is a fifth needed? ";
  q += "Finally the answer is requested.";
  return q;
}

inline void write_png_fixture(const std::filesystem::path& p) {
  Bitmap img(6, 4, Rgb{200, 30, 30});
  write_png(p, img);
}

// Writes `n_text` text-only and `n_image` image-bearing instances,
// interleaved, to `dir/name`. Image parts reference dir/img.png.
inline std::filesystem::path write_mixed_corpus(const std::filesystem::path& dir,
                                                const std::string& name, int n_text, int n_image) {
  write_png_fixture(dir / "img.png");
  CorpusWriter w(dir / name);
  int t = 0, m = 0;
  while (t < n_text || m < n_image) {
    if (t < n_text) {
      Instance inst{"txt-" + std::to_string(t), {ContentPart::text(long_question(t))},
                    "answer " + std::to_string(t)};
      w.write(inst);
      ++t;
    }
    if (m < n_image) {
      Instance inst{"img-" + std::to_string(m),
                    {ContentPart::image("img.png"), ContentPart::text("Describe the picture.")},
                    "red"};
      w.write(inst);
      ++m;
    }
  }
  w.close();
  return dir / name;
}

}  // namespace lomo::testing
