#ifndef LATENT_EMBED_SERIALIZATION_HPP
#define LATENT_EMBED_SERIALIZATION_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "latent_embed/gradients.hpp"
#include "latent_embed/optim.hpp"
#include "latent_embed/synthdata.hpp"

namespace latent_embed {

using Json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "latent-embed/v1";
inline constexpr const char* kDatasetFormat = "latent-embed-scenes/v1";

Json to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const Json& j);

Json to_json(const ActivityArchetype& a);
ActivityArchetype archetype_from_json(const Json& j);

/// One dataset line. Features are written with round-trip precision.
Json scene_to_record(const CollectiveScene& scene);
/// `line` is used only for error messages. Missing neighborhoods default to full.
CollectiveScene scene_from_record(const Json& record, std::size_t line);

/// Line-delimited records: an optional header line carrying the split, seed,
/// and archetype manifest, followed by one scene per line.
void write_dataset(const Dataset& dataset, std::ostream& out);
Dataset read_dataset(std::istream& in);

void save_scenes(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_scenes(const std::filesystem::path& path);

enum class ModelKind { LatentEmbed, ImageBaseline, PersonBaseline };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Everything needed to evaluate or resume a run.
struct Checkpoint {
  ModelKind kind = ModelKind::LatentEmbed;
  HyperParams hp;
  ModelParams params;    ///< latent-embed only
  LinearParams linear;   ///< baselines only
  std::optional<AdamState> optimizer;

  bool operator==(const Checkpoint& other) const;
};

Json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Json to_json(const GradCheckReport& report);

/// Reads a whole JSON document from disk; Io/Parse errors on failure.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace latent_embed

#endif  // LATENT_EMBED_SERIALIZATION_HPP
