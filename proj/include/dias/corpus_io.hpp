#pragma once

// Corpus container and its on-disk format: a little-endian blob of float32
// vectors (magic "DIAS", u32 version) addressed by a separate JSON manifest.
// Round-trips are lossless at 32-bit precision; structural problems raise
// format errors naming the offending byte position.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dias/matrix.hpp"

namespace dias {

struct CorpusInstance {
  int id = 0;
  Mat<double> image;                // n_v x d_in_image
  std::vector<Mat<double>> texts;   // usually 5, each n_t x d_in_text
};

struct Corpus {
  std::size_t d_in_image = 0, d_in_text = 0;
  std::vector<CorpusInstance> instances;

  std::size_t text_count() const {
    std::size_t n = 0;
    for (const auto& inst : instances) n += inst.texts.size();
    return n;
  }
};

constexpr std::uint8_t kCorpusMagic[4] = {0x44, 0x49, 0x41, 0x53};  // "DIAS"
constexpr std::uint32_t kCorpusVersion = 1;

class CorpusFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void append_f32(std::vector<std::uint8_t>& blob, const Mat<double>& m) {
  for (double v : m.flat()) {
    const float f = static_cast<float>(v);
    std::uint8_t bytes[4];
    std::memcpy(bytes, &f, 4);
    blob.insert(blob.end(), bytes, bytes + 4);
  }
}

inline Mat<double> read_f32(const std::vector<std::uint8_t>& blob, std::size_t offset,
                            std::size_t rows, std::size_t cols) {
  const std::size_t bytes = rows * cols * 4;
  if (offset + bytes > blob.size())
    throw CorpusFormatError("corpus blob: block at byte " + std::to_string(offset) +
                            " extends past end of blob (" + std::to_string(blob.size()) +
                            " bytes)");
  Mat<double> m(rows, cols);
  std::size_t pos = offset;
  for (double& v : m.flat()) {
    float f;
    std::memcpy(&f, blob.data() + pos, 4);
    v = static_cast<double>(f);
    pos += 4;
  }
  return m;
}

}  // namespace detail

inline void write_corpus(const Corpus& corpus, const std::string& blob_path,
                         const std::string& manifest_path) {
  std::vector<std::uint8_t> blob(kCorpusMagic, kCorpusMagic + 4);
  const std::uint32_t version = kCorpusVersion;
  std::uint8_t vbytes[4];
  std::memcpy(vbytes, &version, 4);
  blob.insert(blob.end(), vbytes, vbytes + 4);

  nlohmann::ordered_json manifest;
  manifest["version"] = kCorpusVersion;
  manifest["d_in_image"] = corpus.d_in_image;
  manifest["d_in_text"] = corpus.d_in_text;
  manifest["instances"] = nlohmann::ordered_json::array();

  int next_text_id = 0;
  for (const auto& inst : corpus.instances) {
    nlohmann::ordered_json entry;
    entry["id"] = inst.id;
    entry["n_v"] = inst.image.rows();
    entry["image_offset"] = blob.size();
    detail::append_f32(blob, inst.image);
    entry["texts"] = nlohmann::ordered_json::array();
    for (const auto& text : inst.texts) {
      nlohmann::ordered_json te;
      te["id"] = next_text_id++;
      te["n_t"] = text.rows();
      te["offset"] = blob.size();
      detail::append_f32(blob, text);
      entry["texts"].push_back(te);
    }
    manifest["instances"].push_back(entry);
  }

  std::ofstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("write_corpus: cannot open " + blob_path);
  bf.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  bf.close();

  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("write_corpus: cannot open " + manifest_path);
  mf << manifest.dump(2) << "\n";
}

inline Corpus read_corpus(const std::string& blob_path, const std::string& manifest_path) {
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("read_corpus: cannot open " + blob_path);
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(bf)),
                                 std::istreambuf_iterator<char>());

  if (blob.size() < 8)
    throw CorpusFormatError("corpus blob: truncated header, " + std::to_string(blob.size()) +
                            " bytes at byte 0");
  if (std::memcmp(blob.data(), kCorpusMagic, 4) != 0)
    throw CorpusFormatError("corpus blob: bad magic at byte 0");
  std::uint32_t version;
  std::memcpy(&version, blob.data() + 4, 4);
  if (version != kCorpusVersion)
    throw CorpusFormatError("corpus blob: unsupported version " + std::to_string(version) +
                            " at byte 4");

  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("read_corpus: cannot open " + manifest_path);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CorpusFormatError(std::string("corpus manifest: ") + e.what());
  }

  Corpus corpus;
  try {
    if (manifest.at("version").get<std::uint32_t>() != kCorpusVersion)
      throw CorpusFormatError("corpus manifest: unsupported version");
    corpus.d_in_image = manifest.at("d_in_image").get<std::size_t>();
    corpus.d_in_text = manifest.at("d_in_text").get<std::size_t>();

    // Track blocks so overlaps can be rejected.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;  // offset, byte size
    for (const auto& entry : manifest.at("instances")) {
      CorpusInstance inst;
      inst.id = entry.at("id").get<int>();
      const std::size_t nv = entry.at("n_v").get<std::size_t>();
      const std::size_t img_off = entry.at("image_offset").get<std::size_t>();
      if (img_off < 8)
        throw CorpusFormatError("corpus manifest: image offset " + std::to_string(img_off) +
                                " inside the header");
      inst.image = detail::read_f32(blob, img_off, nv, corpus.d_in_image);
      blocks.emplace_back(img_off, nv * corpus.d_in_image * 4);
      for (const auto& te : entry.at("texts")) {
        const std::size_t nt = te.at("n_t").get<std::size_t>();
        const std::size_t off = te.at("offset").get<std::size_t>();
        if (off < 8)
          throw CorpusFormatError("corpus manifest: text offset " + std::to_string(off) +
                                  " inside the header");
        inst.texts.push_back(detail::read_f32(blob, off, nt, corpus.d_in_text));
        blocks.emplace_back(off, nt * corpus.d_in_text * 4);
      }
      corpus.instances.push_back(std::move(inst));
    }

    std::sort(blocks.begin(), blocks.end());
    std::size_t extent = 8;
    for (const auto& [off, len] : blocks) {
      if (off < extent)
        throw CorpusFormatError("corpus manifest: overlapping block at byte " +
                                std::to_string(off));
      extent = off + len;
    }
    if (extent != blob.size())
      throw CorpusFormatError("corpus blob: manifest covers " + std::to_string(extent) +
                              " bytes but blob has " + std::to_string(blob.size()) +
                              "; mismatch at byte " + std::to_string(extent));
  } catch (const nlohmann::json::exception& e) {
    throw CorpusFormatError(std::string("corpus manifest: ") + e.what());
  }
  return corpus;
}

}  // namespace dias
