// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace sepasr {

namespace {

constexpr const char* kMagic = "sepasr-checkpoint v1";

void write_f64_le(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Error::Kind::Io, "cannot open checkpoint for writing: ", path);
  os << kMagic << "\n";
  os << "precision f64\n";
  os << "count " << params.size() << "\n";
  for (const auto& [name, tensor] : params) {
    os << "param " << name << " " << tensor.rank();
    for (auto d : tensor.shape()) os << " " << d;
    os << "\n";
  }
  os << "data\n";
  for (const auto& [name, tensor] : params) {
    (void)name;
    for (double v : tensor.values()) write_f64_le(os, v);
  }
  if (!os) fail(Error::Kind::Io, "write failed for checkpoint: ", path);
}

void load_checkpoint(const std::string& path, NamedParams& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Error::Kind::Io, "cannot open checkpoint: ", path);
  std::string line;
  if (!std::getline(is, line) || line != kMagic) {
    fail(Error::Kind::Checkpoint, "bad checkpoint magic in ", path);
  }
  if (!std::getline(is, line) || line != "precision f64") {
    fail(Error::Kind::Checkpoint, "unsupported checkpoint precision in ", path, ": ", line);
  }
  if (!std::getline(is, line) || line.rfind("count ", 0) != 0) {
    fail(Error::Kind::Checkpoint, "missing parameter count in ", path);
  }
  const std::size_t count = std::stoull(line.substr(6));

  struct Entry {
    Shape shape;
    std::size_t order;
  };
  std::map<std::string, Entry> header;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) fail(Error::Kind::Checkpoint, "truncated header in ", path);
    std::istringstream ls(line);
    std::string tag, name;
    int rank = 0;
    ls >> tag >> name >> rank;
    if (tag != "param" || !ls || rank < 0) {
      fail(Error::Kind::Checkpoint, "malformed header line in ", path, ": ", line);
    }
    Shape shape(static_cast<std::size_t>(rank));
    for (auto& d : shape) {
      ls >> d;
      if (!ls) fail(Error::Kind::Checkpoint, "malformed shape in ", path, ": ", line);
    }
    header[name] = Entry{std::move(shape), i};
    order.push_back(name);
  }
  if (!std::getline(is, line) || line != "data") {
    fail(Error::Kind::Checkpoint, "missing data marker in ", path);
  }

  // Validate against the model's parameter list before touching any values.
  std::map<std::string, Tensor*> targets;
  for (auto& [name, tensor] : params) targets[name] = &tensor;
  if (targets.size() != header.size()) {
    fail(Error::Kind::Checkpoint, "checkpoint has ", header.size(), " parameters but model has ",
         targets.size());
  }
  for (const auto& [name, entry] : header) {
    auto it = targets.find(name);
    if (it == targets.end()) {
      fail(Error::Kind::Checkpoint, "checkpoint parameter not in model: ", name);
    }
    if (it->second->shape() != entry.shape) {
      fail(Error::Kind::Checkpoint, "shape mismatch for ", name, ": checkpoint ",
           shape_str(entry.shape), " vs model ", shape_str(it->second->shape()));
    }
  }

  for (const auto& name : order) {
    Tensor* t = targets[name];
    auto& vals = t->mutable_values();
    for (auto& v : vals) v = read_f64_le(is);
    if (!is) fail(Error::Kind::Checkpoint, "truncated data for ", name, " in ", path);
  }
}

}  // namespace sepasr
