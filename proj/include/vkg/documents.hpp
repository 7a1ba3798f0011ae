#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vkg/explanation.hpp"
#include "vkg/imputation.hpp"
#include "vkg/sdkg.hpp"
#include "vkg/trajectory.hpp"
#include "vkg/workflow.hpp"

namespace vkg {

using Json = nlohmann::json;

/// Version stamped on every persisted document and API response.
inline constexpr int kSchemaVersion = 1;

/// A document that is not valid JSON, has the wrong shape, or carries
/// fields the reader does not know.
struct DocumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void to_json(Json& j, const Mmsi& m);
void from_json(const Json& j, Mmsi& m);
void to_json(Json& j, const NodeId& id);
void from_json(const Json& j, NodeId& id);
void to_json(Json& j, const AisRecord& r);
void from_json(const Json& j, AisRecord& r);
void to_json(Json& j, const Trajectory& t);
void from_json(const Json& j, Trajectory& t);
void to_json(Json& j, const Segment& s);
void from_json(const Json& j, Segment& s);
void to_json(Json& j, const Gap& g);
void from_json(const Json& j, Gap& g);
void to_json(Json& j, const StaticAttr& a);
void from_json(const Json& j, StaticAttr& a);
void to_json(Json& j, const EvidenceEdge& e);
void from_json(const Json& j, EvidenceEdge& e);
void to_json(Json& j, const ImputedSegment& s);
void from_json(const Json& j, ImputedSegment& s);
void to_json(Json& j, const Node& n);
void from_json(const Json& j, Node& n);
void to_json(Json& j, const Edge& e);
void from_json(const Json& j, Edge& e);
void to_json(Json& j, const SubgraphDoc& d);
void from_json(const Json& j, SubgraphDoc& d);
void to_json(Json& j, const SegmentReport& r);
void from_json(const Json& j, SegmentReport& r);
void to_json(Json& j, const NodeReport& r);
void to_json(Json& j, const JobConfig& c);
void from_json(const Json& j, JobConfig& c);
void to_json(Json& j, const JobStatus& s);
void from_json(const Json& j, JobStatus& s);
void to_json(Json& j, const EvalReport& r);

/// Strict JobConfig reader: unknown fields and bad values throw InvalidJobConfig.
JobConfig job_config_from_json(const Json& j);

/// Reads a JobConfig file. Relative paths inside it resolve against the
/// file's directory, except source.cache_dir, which ingest places under
/// data_dir when relative.
JobConfig load_job_config(const std::filesystem::path& path);

/// Parses text as JSON; throws DocumentError.
Json parse_document(std::string_view text);

}  // namespace vkg
