#include "uvwprop/meshio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uvwprop/error.hpp"

namespace uvwprop {

namespace {

enum class ScalarType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<ScalarType> parse_scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUint8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUint16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUint32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUint8:
      return 1;
    case ScalarType::kInt16:
    case ScalarType::kUint16:
      return 2;
    case ScalarType::kInt32:
    case ScalarType::kUint32:
    case ScalarType::kFloat32:
      return 4;
    case ScalarType::kFloat64:
      return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUint8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class BodyFormat { kAscii, kBinaryLittleEndian };

template <typename T>
T load_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Cursor over an ascii body that tracks line numbers for diagnostics.
class AsciiCursor {
 public:
  AsciiCursor(std::string_view body, std::size_t first_line, const std::string& name)
      : body_(body), line_(first_line), name_(name) {}

  std::string_view next_token() {
    while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) {
      if (body_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= body_.size()) {
      throw parse_error(name_ + ": truncated ascii body at line " + std::to_string(line_));
    }
    const std::size_t start = pos_;
    while (pos_ < body_.size() && !std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    return body_.substr(start, pos_ - start);
  }

  // float32 properties parse as float so shortest round-trip text reads back
  // to the same value.
  double next_number(ScalarType t) {
    const std::string_view tok = next_token();
    const char* end = tok.data() + tok.size();
    double value = 0.0;
    std::from_chars_result r;
    if (t == ScalarType::kFloat32) {
      float f = 0.0f;
      r = std::from_chars(tok.data(), end, f);
      value = f;
    } else {
      r = std::from_chars(tok.data(), end, value);
    }
    if (r.ec != std::errc() || r.ptr != end) {
      throw parse_error(name_ + ": invalid number \"" + std::string(tok) + "\" at line " +
                        std::to_string(line_));
    }
    return value;
  }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
  std::size_t line_;
  const std::string& name_;
};

class BinaryCursor {
 public:
  BinaryCursor(std::string_view bytes, std::size_t offset, const std::string& name)
      : bytes_(bytes), pos_(offset), name_(name) {}

  double next(ScalarType t) {
    const std::size_t n = scalar_size(t);
    if (pos_ + n > bytes_.size()) {
      throw parse_error(name_ + ": truncated binary body at byte " + std::to_string(pos_) +
                        " (need " + std::to_string(pos_ + n) + " bytes, file has " +
                        std::to_string(bytes_.size()) + ")");
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    switch (t) {
      case ScalarType::kInt8:
        return load_le<std::int8_t>(p);
      case ScalarType::kUint8:
        return load_le<std::uint8_t>(p);
      case ScalarType::kInt16:
        return load_le<std::int16_t>(p);
      case ScalarType::kUint16:
        return load_le<std::uint16_t>(p);
      case ScalarType::kInt32:
        return load_le<std::int32_t>(p);
      case ScalarType::kUint32:
        return load_le<std::uint32_t>(p);
      case ScalarType::kFloat32:
        return load_le<float>(p);
      case ScalarType::kFloat64:
        return load_le<double>(p);
    }
    return 0.0;
  }

  std::size_t offset() const { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_;
  const std::string& name_;
};

struct Header {
  BodyFormat format = BodyFormat::kAscii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
  std::size_t body_line = 0;
};

Header parse_header(std::string_view bytes, const std::string& name) {
  Header h;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_format = false;
  auto fail = [&](const std::string& msg) {
    return parse_error(name + ": " + msg + " at header line " + std::to_string(line_no));
  };
  while (true) {
    if (pos >= bytes.size()) {
      ++line_no;
      throw fail("missing end_header");
    }
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;

    const auto words = split_words(line);
    if (line_no == 1) {
      if (words.size() != 1 || words[0] != "ply") throw fail("not a PLY file (expected \"ply\")");
      continue;
    }
    if (words.empty()) continue;
    const std::string_view kw = words[0];
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (words.size() != 3 || words[2] != "1.0") throw fail("malformed format line");
      if (words[1] == "ascii") {
        h.format = BodyFormat::kAscii;
      } else if (words[1] == "binary_little_endian") {
        h.format = BodyFormat::kBinaryLittleEndian;
      } else {
        throw fail("unsupported format \"" + std::string(words[1]) + "\"");
      }
      saw_format = true;
    } else if (kw == "element") {
      if (words.size() != 3) throw fail("malformed element line");
      Element e;
      e.name = std::string(words[1]);
      const auto [ptr, ec] =
          std::from_chars(words[2].data(), words[2].data() + words[2].size(), e.count);
      if (ec != std::errc() || ptr != words[2].data() + words[2].size()) {
        throw fail("invalid element count");
      }
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty()) throw fail("property before any element");
      Property p;
      if (words.size() == 5 && words[1] == "list") {
        auto ct = parse_scalar_type(words[2]);
        auto it = parse_scalar_type(words[3]);
        if (!ct || !it) throw fail("unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(words[4]);
      } else if (words.size() == 3) {
        auto t = parse_scalar_type(words[1]);
        if (!t) throw fail("unknown property type \"" + std::string(words[1]) + "\"");
        p.type = *t;
        p.name = std::string(words[2]);
      } else {
        throw fail("malformed property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else if (kw == "end_header") {
      if (words.size() != 1) throw fail("malformed end_header line");
      break;
    } else {
      throw fail("unknown header keyword \"" + std::string(kw) + "\"");
    }
  }
  if (!saw_format) throw parse_error(name + ": header has no format line");
  h.body_offset = pos;
  h.body_line = line_no + 1;
  return h;
}

// Column of each known vertex property, or -1.
struct VertexLayout {
  int pos[3] = {-1, -1, -1};
  int vel[3] = {-1, -1, -1};
  int uvw[3] = {-1, -1, -1};
};

VertexLayout vertex_layout(const Element& e, const std::string& name,
                           std::vector<std::string>* warnings) {
  VertexLayout layout;
  static const char* kNames[3][3] = {{"x", "y", "z"}, {"vx", "vy", "vz"}, {"u", "v", "w"}};
  int* slots[3] = {layout.pos, layout.vel, layout.uvw};
  for (std::size_t col = 0; col < e.properties.size(); ++col) {
    const Property& p = e.properties[col];
    bool known = false;
    for (int g = 0; g < 3 && !known; ++g) {
      for (int k = 0; k < 3; ++k) {
        if (p.name == kNames[g][k]) {
          if (p.is_list || p.type != ScalarType::kFloat32) {
            throw parse_error(name + ": vertex property " + p.name + " must be float32");
          }
          slots[g][k] = static_cast<int>(col);
          known = true;
          break;
        }
      }
    }
    if (!known && warnings) warnings->push_back(name + ": skipping vertex property " + p.name);
  }
  for (int k = 0; k < 3; ++k) {
    if (layout.pos[k] < 0) {
      throw parse_error(name + ": vertex element lacks property " + std::string(kNames[0][k]));
    }
  }
  for (int g = 1; g < 3; ++g) {
    const int present = (slots[g][0] >= 0) + (slots[g][1] >= 0) + (slots[g][2] >= 0);
    if (present != 0 && present != 3) {
      throw parse_error(name + ": vertex properties " + kNames[g][0] + "," + kNames[g][1] + "," +
                        kNames[g][2] + " must appear together");
    }
  }
  return layout;
}

int face_index_column(const Element& e, const std::string& name,
                      std::vector<std::string>* warnings) {
  int column = -1;
  for (std::size_t col = 0; col < e.properties.size(); ++col) {
    const Property& p = e.properties[col];
    if (p.name == "vertex_indices") {
      if (!p.is_list || p.count_type != ScalarType::kUint8 || p.type != ScalarType::kInt32) {
        throw parse_error(name + ": face property must be \"list uchar int vertex_indices\"");
      }
      column = static_cast<int>(col);
    } else if (warnings) {
      warnings->push_back(name + ": skipping face property " + p.name);
    }
  }
  if (column < 0) throw parse_error(name + ": face element lacks vertex_indices");
  return column;
}

template <typename Cursor>
void read_body(Cursor& cur, const Header& h, const std::string& name, MeshFrame& frame,
               std::vector<std::string>* warnings, std::vector<std::vector<std::int64_t>>& faces) {
  auto read_scalar = [&](ScalarType t) {
    if constexpr (std::is_same_v<Cursor, BinaryCursor>) {
      return cur.next(t);
    } else {
      return cur.next_number(t);
    }
  };
  bool saw_vertex = false;
  for (const Element& e : h.elements) {
    if (e.name == "vertex") {
      const VertexLayout layout = vertex_layout(e, name, warnings);
      saw_vertex = true;
      frame.positions.resize(e.count);
      frame.velocities.assign(e.count, Vec3{});
      const bool has_uvw = layout.uvw[0] >= 0;
      if (has_uvw) frame.uvws.emplace(e.count);
      std::vector<double> row(e.properties.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t col = 0; col < e.properties.size(); ++col) {
          const Property& p = e.properties[col];
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(read_scalar(p.count_type));
            for (std::size_t k = 0; k < n; ++k) read_scalar(p.type);
            row[col] = 0.0;
          } else {
            row[col] = read_scalar(p.type);
          }
        }
        auto gather = [&](const int* cols) { return Vec3{row[cols[0]], row[cols[1]], row[cols[2]]}; };
        frame.positions[i] = gather(layout.pos);
        if (layout.vel[0] >= 0) frame.velocities[i] = gather(layout.vel);
        if (has_uvw) (*frame.uvws)[i] = gather(layout.uvw);
      }
    } else if (e.name == "face") {
      const int column = face_index_column(e, name, warnings);
      faces.resize(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t col = 0; col < e.properties.size(); ++col) {
          const Property& p = e.properties[col];
          std::size_t n = 1;
          if (p.is_list) n = static_cast<std::size_t>(read_scalar(p.count_type));
          for (std::size_t k = 0; k < n; ++k) {
            const double v = read_scalar(p.type);
            if (static_cast<int>(col) == column) faces[i].push_back(static_cast<std::int64_t>(v));
          }
        }
      }
    } else {
      if (warnings) warnings->push_back(name + ": skipping element " + e.name);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const Property& p : e.properties) {
          std::size_t n = 1;
          if (p.is_list) n = static_cast<std::size_t>(read_scalar(p.count_type));
          for (std::size_t k = 0; k < n; ++k) read_scalar(p.type);
        }
      }
    }
  }
  if (!saw_vertex) throw parse_error(name + ": no vertex element");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("failed reading " + path.string());
  return std::move(ss).str();
}

template <typename T>
void append_le(std::string& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) throw io_error("failed writing " + path.string());
}

}  // namespace

MeshFrame parse_ply(std::string_view bytes, const std::string& name,
                    std::vector<std::string>* warnings) {
  const Header h = parse_header(bytes, name);
  MeshFrame frame;
  std::vector<std::vector<std::int64_t>> faces;
  if (h.format == BodyFormat::kAscii) {
    AsciiCursor cur(bytes.substr(h.body_offset), h.body_line, name);
    read_body(cur, h, name, frame, warnings, faces);
  } else {
    BinaryCursor cur(bytes, h.body_offset, name);
    read_body(cur, h, name, frame, warnings, faces);
    if (cur.offset() != bytes.size() && warnings) {
      warnings->push_back(name + ": ignoring " + std::to_string(bytes.size() - cur.offset()) +
                          " trailing bytes");
    }
  }

  const std::size_t nv = frame.positions.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& idx = faces[f];
    if (idx.size() < 3) {
      throw validation_error(name + ": face " + std::to_string(f) + " has " +
                             std::to_string(idx.size()) + " vertices");
    }
    for (std::int64_t v : idx) {
      if (v < 0 || static_cast<std::size_t>(v) >= nv) {
        throw validation_error(name + ": face " + std::to_string(f) + " references vertex " +
                               std::to_string(v) + " but the file has " + std::to_string(nv) +
                               " vertices");
      }
    }
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      frame.triangles.push_back({static_cast<std::uint32_t>(idx[0]),
                                 static_cast<std::uint32_t>(idx[k]),
                                 static_cast<std::uint32_t>(idx[k + 1])});
    }
  }
  try {
    validate_frame(frame);
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  }
  return frame;
}

MeshFrame read_frame(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_ply(read_file(path), path.string(), warnings);
}

std::string format_float(float value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_frame(const MeshFrame& frame, const std::filesystem::path& path, FrameFormat format) {
  validate_frame(frame);
  std::string out;
  const std::size_t nv = frame.positions.size();
  const bool has_uvw = frame.has_uvws();
  auto f32 = [](double v) { return static_cast<float>(v); };

  if (format == FrameFormat::kObj) {
    out.reserve(nv * 64 + frame.triangles.size() * 32);
    auto put3 = [&](const char* tag, const Vec3& v) {
      out += tag;
      out += ' ';
      out += format_float(f32(v.x));
      out += ' ';
      out += format_float(f32(v.y));
      out += ' ';
      out += format_float(f32(v.z));
      out += '\n';
    };
    for (const Vec3& p : frame.positions) put3("v", p);
    if (has_uvw) {
      for (const Vec3& u : *frame.uvws) put3("vt", u);
    }
    for (const Triangle& t : frame.triangles) {
      out += 'f';
      for (std::uint32_t v : t) {
        const std::string i = std::to_string(v + 1);
        out += ' ';
        out += i;
        if (has_uvw) {
          out += '/';
          out += i;
        }
      }
      out += '\n';
    }
    write_file(path, out);
    return;
  }

  const bool binary = format == FrameFormat::kPlyBinary;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(nv) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property float vx\nproperty float vy\nproperty float vz\n";
  if (has_uvw) out += "property float u\nproperty float v\nproperty float w\n";
  out += "element face " + std::to_string(frame.triangles.size()) + "\n";
  out += "property list uchar int vertex_indices\n";
  out += "end_header\n";

  for (std::size_t i = 0; i < nv; ++i) {
    float row[9];
    int n = 0;
    for (const Vec3* v : {&frame.positions[i], &frame.velocities[i]}) {
      row[n++] = f32(v->x);
      row[n++] = f32(v->y);
      row[n++] = f32(v->z);
    }
    if (has_uvw) {
      const Vec3& u = (*frame.uvws)[i];
      row[n++] = f32(u.x);
      row[n++] = f32(u.y);
      row[n++] = f32(u.z);
    }
    if (binary) {
      for (int k = 0; k < n; ++k) append_le(out, row[k]);
    } else {
      for (int k = 0; k < n; ++k) {
        if (k) out += ' ';
        out += format_float(row[k]);
      }
      out += '\n';
    }
  }
  for (const Triangle& t : frame.triangles) {
    if (binary) {
      append_le(out, std::uint8_t{3});
      for (std::uint32_t v : t) append_le(out, static_cast<std::int32_t>(v));
    } else {
      out += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
    }
  }
  write_file(path, out);
}

SequenceManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(path.string() + ": invalid JSON: " + e.what());
  }
  auto schema = [&](const std::string& key, const std::string& msg) {
    return validation_error(path.string() + ": key \"" + key + "\" " + msg);
  };
  if (!doc.is_object()) throw validation_error(path.string() + ": manifest must be a JSON object");

  SequenceManifest m;
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw schema("version", "must be an integer");
  }
  m.version = doc["version"].get<int>();
  if (m.version != 1) throw schema("version", "must be 1");

  if (!doc.contains("fps") || !doc["fps"].is_number()) throw schema("fps", "must be a number");
  m.fps = doc["fps"].get<double>();
  if (!(m.fps > 0.0) || !std::isfinite(m.fps)) throw schema("fps", "must be > 0");

  if (!doc.contains("velocity_convention") || !doc["velocity_convention"].is_string()) {
    throw schema("velocity_convention", "must be \"previous\" or \"current\"");
  }
  const std::string conv = doc["velocity_convention"].get<std::string>();
  if (conv != "previous" && conv != "current") {
    throw schema("velocity_convention", "must be \"previous\" or \"current\"");
  }
  m.velocity_convention = parse_velocity_convention(conv);

  if (!doc.contains("frames") || !doc["frames"].is_array()) throw schema("frames", "must be an array");
  for (const auto& f : doc["frames"]) {
    if (!f.is_string()) throw schema("frames", "must contain only strings");
    m.frames.push_back(f.get<std::string>());
  }
  if (m.frames.empty()) throw schema("frames", "must not be empty");

  m.directory = path.parent_path();
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const auto p = m.frame_path(i);
    if (!std::filesystem::is_regular_file(p)) throw io_error("missing frame file " + p.string());
  }
  return m;
}

void save_manifest(const SequenceManifest& manifest, const std::filesystem::path& path) {
  if (manifest.frames.empty()) throw validation_error("manifest has no frames");
  if (!(manifest.fps > 0.0)) throw validation_error("manifest fps must be > 0");
  nlohmann::ordered_json doc;
  doc["version"] = manifest.version;
  doc["fps"] = manifest.fps;
  doc["velocity_convention"] = to_string(manifest.velocity_convention);
  doc["frames"] = manifest.frames;
  write_file(path, doc.dump(2) + "\n");
}

FramePrefetcher::FramePrefetcher(SequenceManifest manifest) : manifest_(std::move(manifest)) {
  refill();
}

FramePrefetcher::~FramePrefetcher() {
  for (auto& f : pending_) {
    if (f.valid()) f.wait();
  }
}

void FramePrefetcher::refill() {
  while (pending_.size() < kDepth && scheduled_ < manifest_.frames.size()) {
    const auto path = manifest_.frame_path(scheduled_++);
    pending_.push_back(std::async(std::launch::async, [path] {
      Loaded l;
      l.frame = read_frame(path, &l.warnings);
      return l;
    }));
  }
}

std::optional<MeshFrame> FramePrefetcher::next() {
  if (pending_.empty()) return std::nullopt;
  std::future<Loaded> f = std::move(pending_.front());
  pending_.pop_front();
  Loaded l = f.get();
  refill();
  warnings_.insert(warnings_.end(), l.warnings.begin(), l.warnings.end());
  return std::move(l.frame);
}

}  // namespace uvwprop
