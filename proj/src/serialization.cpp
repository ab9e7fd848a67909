#include "latent_embed/serialization.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace latent_embed {

namespace {

Json vec_to_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) v[static_cast<Eigen::Index>(k)] = values[k];
  return v;
}

const Json& field(const Json& j, const char* name, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record is not an object");
  const auto it = j.find(name);
  if (it == j.end()) throw ParseError(line, std::string("missing field '") + name + "'");
  return *it;
}

template <typename T>
T typed_field(const Json& j, const char* name, std::size_t line) {
  try {
    return field(j, name, line).get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(line, std::string("field '") + name + "': " + e.what());
  }
}

Json tensors_to_json(const std::vector<ConstTensorView>& tensors) {
  Json out = Json::array();
  for (const auto& t : tensors) {
    out.push_back({{"name", std::string(t.name)},
                   {"rows", t.rows},
                   {"cols", t.cols},
                   {"values", std::vector<double>(t.values.begin(), t.values.end())}});
  }
  return out;
}

void tensors_from_json(const Json& j, std::vector<TensorView> into) {
  if (!j.is_array() || j.size() != into.size())
    throw Error(ErrorKind::Schema, "checkpoint tensor list does not match the model layout");
  for (std::size_t k = 0; k < into.size(); ++k) {
    const Json& t = j[k];
    const auto name = t.at("name").get<std::string>();
    if (name != into[k].name)
      throw Error(ErrorKind::Schema, "expected tensor " + std::string(into[k].name) + ", found " + name);
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows != into[k].rows) throw ShapeError(name + " rows", into[k].rows, rows);
    if (cols != into[k].cols) throw ShapeError(name + " cols", into[k].cols, cols);
    const auto values = t.at("values").get<std::vector<double>>();
    if (values.size() != into[k].values.size())
      throw ShapeError(name + " value count", into[k].values.size(), values.size());
    std::copy(values.begin(), values.end(), into[k].values.begin());
  }
}

Json moments_to_json(const std::vector<Vec>& moments) {
  Json out = Json::array();
  for (const auto& m : moments) out.push_back(vec_to_json(m));
  return out;
}

std::vector<Vec> moments_from_json(const Json& j) {
  std::vector<Vec> out;
  for (const auto& m : j) out.push_back(vec_from_json(m));
  return out;
}

}  // namespace

Json to_json(const HyperParams& hp) {
  return {{"d", hp.d},
          {"T", hp.T},
          {"lambda", hp.lambda},
          {"tau", hp.tau},
          {"dropout_rate", hp.dropout_rate},
          {"attention_enabled", hp.attention_enabled},
          {"K", hp.K},
          {"p_dim", hp.p_dim},
          {"s_dim", hp.s_dim}};
}

HyperParams hyperparams_from_json(const Json& j) {
  HyperParams hp;
  try {
    hp.d = j.value("d", hp.d);
    hp.T = j.value("T", hp.T);
    hp.lambda = j.value("lambda", hp.lambda);
    hp.tau = j.value("tau", hp.tau);
    hp.dropout_rate = j.value("dropout_rate", hp.dropout_rate);
    hp.attention_enabled = j.value("attention_enabled", hp.attention_enabled);
    hp.K = j.value("K", hp.K);
    hp.p_dim = j.value("p_dim", hp.p_dim);
    hp.s_dim = j.value("s_dim", hp.s_dim);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("hyperparameters: ") + e.what());
  }
  return hp;
}

Json to_json(const ActivityArchetype& a) {
  return {{"label", a.label},
          {"min_persons", a.min_persons},
          {"max_persons", a.max_persons},
          {"person_direction", vec_to_json(a.person_direction)},
          {"person_noise", a.person_noise},
          {"scene_direction", vec_to_json(a.scene_direction)},
          {"scene_signal", a.scene_signal},
          {"scene_noise", a.scene_noise},
          {"invader_rate", a.invader_rate},
          {"invader_scale", a.invader_scale}};
}

ActivityArchetype archetype_from_json(const Json& j) {
  ActivityArchetype a;
  a.label = j.at("label").get<int>();
  a.min_persons = j.at("min_persons").get<int>();
  a.max_persons = j.at("max_persons").get<int>();
  a.person_direction = vec_from_json(j.at("person_direction"));
  a.person_noise = j.at("person_noise").get<double>();
  a.scene_direction = vec_from_json(j.at("scene_direction"));
  a.scene_signal = j.at("scene_signal").get<double>();
  a.scene_noise = j.at("scene_noise").get<double>();
  a.invader_rate = j.at("invader_rate").get<double>();
  a.invader_scale = j.at("invader_scale").get<double>();
  return a;
}

Json scene_to_record(const CollectiveScene& scene) {
  Json persons = Json::array();
  for (const auto& p : scene.persons) persons.push_back({{"id", p.id}, {"feature", vec_to_json(p.feature)}});
  Json neighborhoods = Json::array();
  for (const auto& [id, members] : scene.neighborhoods) neighborhoods.push_back({{"id", id}, {"neighbors", members}});
  return {{"scene_id", scene.scene_id},
          {"label", scene.label},
          {"scene_feature", vec_to_json(scene.scene_feature)},
          {"persons", persons},
          {"neighborhoods", neighborhoods}};
}

CollectiveScene scene_from_record(const Json& record, std::size_t line) {
  CollectiveScene scene;
  scene.scene_id = typed_field<SceneId>(record, "scene_id", line);
  scene.label = typed_field<int>(record, "label", line);
  scene.scene_feature = vec_from_json(Json(typed_field<std::vector<double>>(record, "scene_feature", line)));
  const Json& persons = field(record, "persons", line);
  if (!persons.is_array() || persons.empty()) throw ParseError(line, "field 'persons' must be a nonempty array");
  for (const auto& p : persons) {
    Person person;
    person.id = typed_field<PersonId>(p, "id", line);
    person.feature = vec_from_json(Json(typed_field<std::vector<double>>(p, "feature", line)));
    scene.persons.push_back(std::move(person));
  }
  if (record.contains("neighborhoods") && !record["neighborhoods"].is_null()) {
    for (const auto& n : record["neighborhoods"]) {
      auto members = typed_field<std::vector<PersonId>>(n, "neighbors", line);
      scene.neighborhoods[typed_field<PersonId>(n, "id", line)] = std::move(members);
    }
  } else {
    scene.neighborhoods = build_neighborhoods(scene, NeighborhoodMode::full());
  }
  return scene;
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  Json header = {{"format", kDatasetFormat}, {"split", dataset.split}, {"seed", dataset.seed}};
  Json manifest = Json::array();
  for (const auto& a : dataset.archetypes) manifest.push_back(to_json(a));
  header["archetypes"] = manifest;
  out << header.dump() << '\n';
  for (const auto& scene : dataset.scenes) out << scene_to_record(scene).dump() << '\n';
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string text;
  std::size_t line = 0;
  std::optional<Eigen::Index> p_dim, s_dim;
  std::set<SceneId> ids;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    if (record.is_object() && record.contains("format")) {
      if (record["format"] != kDatasetFormat)
        throw ParseError(line, "unsupported dataset format " + record["format"].dump());
      try {
        ds.split = record.value("split", std::string());
        ds.seed = record.value("seed", std::uint64_t{0});
        for (const auto& a : record.value("archetypes", Json::array())) ds.archetypes.push_back(archetype_from_json(a));
      } catch (const Json::exception& e) {
        throw ParseError(line, std::string("header: ") + e.what());
      }
      continue;
    }
    CollectiveScene scene = scene_from_record(record, line);
    if (!p_dim) p_dim = scene.persons.front().feature.size();
    if (!s_dim) s_dim = scene.scene_feature.size();
    const std::string where = "line " + std::to_string(line) + ": ";
    if (scene.scene_feature.size() != *s_dim) throw ShapeError(where + "scene feature dim", *s_dim, scene.scene_feature.size());
    for (const auto& p : scene.persons)
      if (p.feature.size() != *p_dim) throw ShapeError(where + "person feature dim", *p_dim, p.feature.size());
    if (!ids.insert(scene.scene_id).second)
      throw Error(ErrorKind::Schema, where + "duplicate scene id " + std::to_string(scene.scene_id));
    ds.scenes.push_back(std::move(scene));
  }
  if (ds.scenes.empty()) throw Error(ErrorKind::EmptyDataset, "no scene records found");
  if (!ds.archetypes.empty()) {
    for (const auto& s : ds.scenes)
      if (s.label < 0 || s.label >= static_cast<int>(ds.archetypes.size()))
        throw Error(ErrorKind::Schema, "scene " + std::to_string(s.scene_id) + " has no matching archetype");
  }
  return ds;
}

void save_scenes(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_dataset(dataset, out);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Dataset load_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return read_dataset(in);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LatentEmbed: return "latent-embed";
    case ModelKind::ImageBaseline: return "image-baseline";
    case ModelKind::PersonBaseline: return "person-baseline";
  }
  return "latent-embed";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "latent-embed") return ModelKind::LatentEmbed;
  if (name == "image-baseline" || name == "image") return ModelKind::ImageBaseline;
  if (name == "person-baseline" || name == "person") return ModelKind::PersonBaseline;
  throw Error(ErrorKind::Config, "unknown model kind '" + name + "'");
}

bool Checkpoint::operator==(const Checkpoint& o) const {
  if (kind != o.kind || !(hp == o.hp) || optimizer.has_value() != o.optimizer.has_value()) return false;
  if (optimizer && !(*optimizer == *o.optimizer)) return false;
  return kind == ModelKind::LatentEmbed ? params == o.params : linear == o.linear;
}

Json to_json(const Checkpoint& c) {
  Json j = {{"format", kCheckpointFormat}, {"model", to_string(c.kind)}, {"hyperparams", to_json(c.hp)}};
  j["params"] = c.kind == ModelKind::LatentEmbed ? tensors_to_json(c.params.tensors())
                                                 : tensors_to_json(c.linear.tensors());
  if (c.optimizer) {
    const AdamState& s = *c.optimizer;
    j["optimizer"] = {{"step", s.step},
                      {"learning_rate", s.config.learning_rate},
                      {"beta1", s.config.beta1},
                      {"beta2", s.config.beta2},
                      {"epsilon", s.config.epsilon},
                      {"first_moment", moments_to_json(s.first_moment)},
                      {"second_moment", moments_to_json(s.second_moment)}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat)
      throw Error(ErrorKind::Schema, std::string("checkpoint format tag is not ") + kCheckpointFormat);
    Checkpoint c;
    c.kind = model_kind_from_string(j.at("model").get<std::string>());
    c.hp = hyperparams_from_json(j.at("hyperparams"));
    c.hp.validate();
    if (c.kind == ModelKind::LatentEmbed) {
      c.params = ModelParams::zeros(c.hp);
      tensors_from_json(j.at("params"), c.params.tensors());
    } else {
      const auto inputs = c.kind == ModelKind::ImageBaseline ? c.hp.s_dim : c.hp.p_dim;
      c.linear = LinearParams::zeros(c.hp.K, inputs);
      tensors_from_json(j.at("params"), c.linear.tensors());
    }
    if (j.contains("optimizer")) {
      const Json& o = j["optimizer"];
      AdamState s;
      s.step = o.at("step").get<std::int64_t>();
      s.config.learning_rate = o.at("learning_rate").get<double>();
      s.config.beta1 = o.at("beta1").get<double>();
      s.config.beta2 = o.at("beta2").get<double>();
      s.config.epsilon = o.at("epsilon").get<double>();
      s.first_moment = moments_from_json(o.at("first_moment"));
      s.second_moment = moments_from_json(o.at("second_moment"));
      c.optimizer = std::move(s);
    }
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_text_file(path, to_json(checkpoint).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_json_file(path)); }

Json to_json(const GradCheckReport& r) {
  Json tensors = Json::array();
  for (const auto& t : r.tensors) {
    tensors.push_back({{"name", t.name},
                       {"max_relative_error", t.max_relative_error},
                       {"worst_row", t.worst_row},
                       {"worst_col", t.worst_col},
                       {"analytic", t.analytic},
                       {"numeric", t.numeric},
                       {"checked", t.checked},
                       {"masked", t.masked}});
  }
  return {{"max_relative_error", r.max_relative_error},
          {"worst", {{"tensor", r.worst_tensor}, {"row", r.worst_row}, {"col", r.worst_col}}},
          {"h", r.h},
          {"tensors", tensors}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace latent_embed
