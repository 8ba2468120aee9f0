#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "giglite/sampler.h"

namespace giglite {

// Sample files: a header comment `# giglite-samples v1 kind=<kind>` followed by one
// compact JSON record per line. Keys are sorted and floats use their shortest
// round-trip form, so identical samples always produce identical bytes.

std::string encode_subgraph(const RootedSubgraph& sg);
std::string encode_sample(const TrainingSample& s);
TrainingSample decode_sample(const std::string& line, size_t lineno = 0);

void serialize_samples(std::ostream& out, SampleKind kind, const std::vector<TrainingSample>& samples);
std::string serialize_samples(SampleKind kind, const std::vector<TrainingSample>& samples);

struct SampleFile {
    SampleKind kind = SampleKind::kLinkPrediction;
    std::vector<TrainingSample> samples;
};

/// Throws ParseError naming the line for malformed or truncated records.
SampleFile deserialize_samples(std::istream& in);
SampleFile read_sample_file(const std::string& path);
void write_sample_file(const std::string& path, SampleKind kind, const std::vector<TrainingSample>& samples);

}  // namespace giglite
