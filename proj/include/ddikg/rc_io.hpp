#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddikg/rc_head.hpp"

namespace ddikg {

// Contents of an instances.jsonl file: a `{"dim": d, "classes": [...]}`
// header line followed by one instance object per line.
struct RcDataset {
  std::size_t dim = 0;
  std::vector<std::string> classes;
  std::vector<RcInstance> instances;
};

RcDataset read_instances(std::istream& in, const std::string& source = "instances",
                         std::size_t max_seq_len = kDefaultMaxSeqLen);
RcDataset read_instances(const std::filesystem::path& path, std::size_t max_seq_len = kDefaultMaxSeqLen);
void write_instances(const RcDataset& data, std::ostream& out);
void write_instances(const RcDataset& data, const std::filesystem::path& path);

}  // namespace ddikg
