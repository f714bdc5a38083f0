// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "addrmatch/embedding.h"
#include "addrmatch/error.h"
#include "addrmatch/random.h"
#include "addrmatch/string_metrics.h"

namespace addrmatch {

namespace {

const std::vector<std::string> kPluralNouns = {
    "Flores",     "Rosas",      "Oliveiras",  "Laranjeiras", "Acácias",    "Amoreiras",  "Pedras",
    "Fontes",     "Moinhos",    "Pinheiros",  "Castanheiros", "Cerejeiras", "Figueiras",  "Palmeiras",
    "Salgueiros", "Vinhas",     "Hortas",     "Eiras",       "Escolas",    "Cruzes",     "Portas",
    "Torres",     "Pontes",     "Barcas",     "Caldas",      "Lagoas",     "Quintas",    "Azenhas",
    "Ferreiros",  "Pescadores", "Marinheiros", "Oleiros",    "Tanoeiros",  "Sapateiros", "Capuchos",
    "Açores",     "Descobertas", "Indústrias", "Camélias",   "Hortênsias", "Violetas",   "Papoilas"};

const std::vector<std::string> kSingularNouns = {
    "Liberdade", "República", "Boavista", "Alegria",  "Esperança", "Misericórdia", "Saudade",
    "Paz",       "Graça",     "Sé",       "Carmo",    "Castelo",   "Mercado",      "Rossio",
    "Calvário",  "Outeiro",   "Souto",    "Ribeiro",  "Monte",     "Vale",         "Campo",
    "Bairro",    "Adro",      "Cruzeiro", "Chafariz", "Terreiro",  "Infante",      "Brasil",
    "Restauração", "Junqueira", "Estação", "Fonte Nova", "Regueira", "Corredoura", "Lapa"};

const std::vector<std::string> kGivenNames = {
    "António", "José",   "Manuel", "João",   "Francisco", "Joaquim",  "Luís",     "Miguel",
    "Pedro",   "Afonso", "Maria",  "Ana",    "Teresa",    "Catarina", "Luísa",    "Inês",
    "Beatriz", "Carolina", "Alexandre", "Duarte", "Gaspar", "Bernardo", "Sebastião", "Vasco"};

const std::vector<std::string> kSurnames = {
    "Silva",    "Santos",    "Ferreira",  "Pereira",  "Oliveira", "Costa",   "Rodrigues", "Martins",
    "Sousa",    "Fernandes", "Gonçalves", "Gomes",    "Lopes",    "Marques", "Almeida",   "Ribeiro",
    "Pinto",    "Carvalho",  "Teixeira",  "Moreira",  "Correia",  "Mendes",  "Nunes",     "Soares",
    "Vieira",   "Monteiro",  "Cardoso",   "Rocha",    "Neves",    "Coelho",  "Cruz",      "Cunha",
    "Pires",    "Ramos",     "Reis",      "Simões",   "Antunes",  "Matos",   "Fonseca",   "Machado",
    "Araújo",   "Barbosa",   "Tavares",   "Lourenço", "Castro",   "Garrett", "Camões",    "Bombarda",
    "Granjo",   "Herculano", "Queirós",   "Pessoa",   "Gama",     "Cabral",  "Magalhães", "Dias"};

const std::vector<std::string> kTitles = {"Dr.", "Prof.", "Eng.", "Padre", "Dom", "Almirante", "General",
                                          "Capitão", "Conde", "Marquês"};

const std::vector<std::string> kDesignations = {
    "Lisboa",     "Porto",        "Coimbra",      "Braga",           "Aveiro",      "Faro",
    "Setúbal",    "Évora",        "Viseu",        "Leiria",          "Guarda",      "Beja",
    "Bragança",   "Castelo Branco", "Portalegre", "Santarém",        "Viana do Castelo", "Vila Real",
    "Funchal",    "Ponta Delgada", "Amadora",     "Almada",          "Sintra",      "Cascais",
    "Oeiras",     "Loures",       "Odivelas",     "Barreiro",        "Seixal",      "Gondomar",
    "Matosinhos", "Maia",         "Valongo",      "Guimarães",       "Famalicão",   "Barcelos",
    "Espinho",    "Ovar",         "Ílhavo",       "Figueira da Foz", "Pombal",      "Tomar",
    "Abrantes",   "Torres Vedras", "Caldas da Rainha", "Peniche",   "Mafra",       "Lagos",
    "Portimão",   "Albufeira",    "Tavira",       "Olhão",           "Loulé",       "Silves",
    "Elvas",      "Estremoz",     "Chaves",       "Lamego",          "Mirandela",   "Covilhã",
    "Fundão"};

const std::vector<std::string> kAccommodations = {"R/C", "1 Esq", "1 Dto", "2 Esq", "2 Dto",
                                                  "3 Esq", "3 Dto", "4 Frente", "Cave", "Loja"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

std::string make_artery_name(Rng& rng) {
  const double u = uniform01(rng);
  if (u < 0.25) {
    const auto& noun = pick(kPluralNouns, rng);
    const bool feminine = noun.size() >= 2 && noun.substr(noun.size() - 2) == "as";
    return std::string(feminine ? "das " : "dos ") + noun;
  }
  if (u < 0.45) {
    const auto& noun = pick(kSingularNouns, rng);
    const bool feminine = noun.back() == 'a' || noun.back() == 'e' || noun.find("ção") != std::string::npos;
    return std::string(feminine ? "da " : "do ") + noun;
  }
  if (u < 0.8) return pick(kGivenNames, rng) + " " + pick(kSurnames, rng);
  if (u < 0.95) return pick(kTitles, rng) + " " + pick(kGivenNames, rng) + " " + pick(kSurnames, rng);
  return pick(kSurnames, rng);
}

std::vector<std::string> build_name_lexicon(std::size_t size, Rng& rng) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  // Bounded attempts: the combinatorial space is large but not unlimited.
  for (std::size_t attempts = 0; names.size() < size && attempts < size * 50; ++attempts) {
    auto name = make_artery_name(rng);
    if (seen.insert(name).second) names.push_back(std::move(name));
  }
  return names;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace

void CorpusConfig::validate() const {
  if (n_addresses < 1) throw Error(ErrorCode::kInvalidArgument, "n_addresses must be >= 1");
  double sum = 0.0;
  for (double p : region_mix) {
    if (p < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative region share");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::kInvalidArgument, "region_mix must sum to 1");
  if (artery_types.empty()) throw Error(ErrorCode::kInvalidArgument, "no artery types");
  if (name_lexicon_size < 1 || designation_lexicon_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "lexicon sizes must be >= 1");
  }
}

void NoiseConfig::validate() const {
  for (double p : {p_abbreviate, p_typo, p_drop_token, p_shuffle, p_zip_degrade}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "noise probabilities must lie in [0, 1]");
  }
  if (max_typos < 0) throw Error(ErrorCode::kInvalidArgument, "max_typos must be >= 0");
}

NoiseConfig NoiseConfig::realistic(std::uint64_t seed) {
  NoiseConfig n;
  n.p_abbreviate = 0.5;
  n.p_typo = 0.4;
  n.p_drop_token = 0.3;
  n.p_shuffle = 0.15;
  n.p_zip_degrade = 0.2;
  n.max_typos = 2;
  n.seed = seed;
  return n;
}

std::vector<NormalizedAddress> generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto names = build_name_lexicon(cfg.name_lexicon_size, rng);
  const std::size_t n_designations = std::min(cfg.designation_lexicon_size, kDesignations.size());

  // Multinomial split of n over the nine regions.
  std::array<std::size_t, 9> per_region{};
  std::array<double, 9> cdf{};
  std::partial_sum(cfg.region_mix.begin(), cfg.region_mix.end(), cdf.begin());
  for (std::size_t i = 0; i < cfg.n_addresses; ++i) {
    const double u = uniform01(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    ++per_region[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), 8))];
  }

  std::vector<NormalizedAddress> corpus;
  corpus.reserve(cfg.n_addresses);
  char id_buf[32];
  for (int digit = 1; digit <= 9; ++digit) {
    std::size_t remaining = per_region[static_cast<std::size_t>(digit - 1)];
    std::vector<int> cp4_pool(1000);
    std::iota(cp4_pool.begin(), cp4_pool.end(), digit * 1000);
    shuffle(cp4_pool, rng);
    std::size_t next_cp4 = 0;
    while (remaining > 0) {
      // One locality: a CP4 with a designation and a handful of arteries.
      const int cp4 = cp4_pool[next_cp4++ % cp4_pool.size()];
      const std::string designation = kDesignations[uniform_index(rng, n_designations)];
      std::size_t locality_size = std::min<std::size_t>(remaining, 20 + uniform_index(rng, 60));
      struct Street {
        int cp3 = 0;
        std::set<std::string> doors;
      };
      std::set<int> used_cp3;
      std::unordered_map<std::string, Street> streets;
      while (locality_size > 0) {
        const auto& type = pick(cfg.artery_types, rng);
        const auto& name = pick(names, rng);
        auto [street_it, fresh] = streets.try_emplace(type + "|" + name);
        auto& street = street_it->second;
        if (fresh) {
          do {
            street.cp3 = static_cast<int>(uniform_index(rng, 1000));
          } while (!used_cp3.insert(street.cp3).second && used_cp3.size() < 1000);
        }
        const int cp3 = street.cp3;
        const std::size_t doors = std::min<std::size_t>(locality_size, 1 + uniform_index(rng, 12));
        auto& used_doors = street.doors;
        std::size_t made = 0;
        while (made < doors) {
          std::string door = std::to_string(1 + uniform_index(rng, 250));
          if (bernoulli(rng, 0.08)) door.push_back(static_cast<char>('A' + uniform_index(rng, 3)));
          if (!used_doors.insert(door).second) continue;
          std::vector<std::optional<std::string>> units{std::nullopt};
          if (bernoulli(rng, 0.15) && doors - made >= 2) {
            const std::size_t first = uniform_index(rng, kAccommodations.size() - 1);
            units = {kAccommodations[first], kAccommodations[first + 1]};
          }
          for (const auto& unit : units) {
            std::snprintf(id_buf, sizeof(id_buf), "addr-%07zu", corpus.size());
            corpus.push_back({id_buf, type, name, door, unit, ZipCode{cp4, cp3, designation}});
            ++made;
          }
        }
        locality_size -= made;
        remaining -= made;
      }
    }
  }
  return corpus;
}

UnnormalizedAddress derive_unnormalized(const NormalizedAddress& addr, const NoiseConfig& noise) {
  noise.validate();
  enum class Kind { kType, kName, kDoor, kUnit, kZip, kDesignation };
  struct Tok {
    std::string text;
    Kind kind;
  };
  Rng rng(mix_seed(noise.seed, fnv1a64(addr.id)));

  std::vector<Tok> toks;
  for (auto& w : split_words(addr.artery_type)) toks.push_back({w, Kind::kType});
  for (auto& w : split_words(addr.artery_name)) toks.push_back({w, Kind::kName});
  toks.push_back({addr.door_id, Kind::kDoor});
  if (addr.accommodation_id) {
    for (auto& w : split_words(*addr.accommodation_id)) toks.push_back({w, Kind::kUnit});
  }
  toks.push_back({addr.zip.code(), Kind::kZip});
  for (auto& w : split_words(addr.zip.designation)) toks.push_back({w, Kind::kDesignation});

  if (bernoulli(rng, noise.p_abbreviate)) {
    for (auto& t : toks) {
      if (t.kind != Kind::kType) continue;
      for (const auto& [full, abbr] : artery_abbreviations()) {
        if (t.text == full) {
          t.text = abbr;
          break;
        }
        if (t.text == abbr) {
          t.text = full;
          break;
        }
      }
    }
  }

  if (bernoulli(rng, noise.p_zip_degrade)) {
    char buf[16];
    const auto mode = uniform_index(rng, 3);
    if (mode == 0) {
      std::snprintf(buf, sizeof(buf), "%04d", addr.zip.cp4);
    } else if (mode == 1) {
      std::snprintf(buf, sizeof(buf), "%04d %03d", addr.zip.cp4, addr.zip.cp3);
    } else {
      std::snprintf(buf, sizeof(buf), "%04d%03d", addr.zip.cp4, addr.zip.cp3);
    }
    for (auto& t : toks) {
      if (t.kind == Kind::kZip) t.text = buf;
    }
  }

  if (bernoulli(rng, noise.p_drop_token)) {
    const auto name_words = std::count_if(toks.begin(), toks.end(), [](const Tok& t) { return t.kind == Kind::kName; });
    std::vector<std::size_t> droppable;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto k = toks[i].kind;
      if (k == Kind::kType || k == Kind::kDesignation || k == Kind::kUnit || (k == Kind::kName && name_words > 1)) {
        droppable.push_back(i);
      }
    }
    if (!droppable.empty()) {
      // A dropped unit takes all of its words with it.
      const auto victim = droppable[uniform_index(rng, droppable.size())];
      if (toks[victim].kind == Kind::kUnit) {
        std::erase_if(toks, [](const Tok& t) { return t.kind == Kind::kUnit; });
      } else {
        toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(victim));
      }
    }
  }

  if (noise.max_typos > 0 && bernoulli(rng, noise.p_typo)) {
    const auto edits = 1 + uniform_index(rng, static_cast<std::uint64_t>(noise.max_typos));
    for (std::uint64_t e = 0; e < edits; ++e) {
      std::vector<std::pair<std::size_t, std::size_t>> sites;  // (token, byte offset) of ASCII letters
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto k = toks[i].kind;
        if (k != Kind::kType && k != Kind::kName && k != Kind::kDesignation) continue;
        const auto& s = toks[i].text;
        const auto letters = std::count_if(s.begin(), s.end(), is_ascii_letter);
        if (letters < 3) continue;
        for (std::size_t p = 0; p < s.size(); ++p) {
          if (is_ascii_letter(s[p])) sites.emplace_back(i, p);
        }
      }
      if (sites.empty()) break;
      const auto [ti, pos] = sites[uniform_index(rng, sites.size())];
      auto& s = toks[ti].text;
      const char letter = static_cast<char>('a' + uniform_index(rng, 26));
      switch (uniform_index(rng, 3)) {
        case 0:
          s[pos] = letter == std::tolower(static_cast<unsigned char>(s[pos])) ? (letter == 'z' ? 'a' : letter + 1) : letter;
          break;
        case 1:
          s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos) + 1, letter);
          break;
        default:
          s.erase(s.begin() + static_cast<std::ptrdiff_t>(pos));
          break;
      }
    }
  }

  if (bernoulli(rng, noise.p_shuffle)) {
    std::vector<std::size_t> street;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto k = toks[i].kind;
      if (k == Kind::kType || k == Kind::kName || k == Kind::kDoor || k == Kind::kUnit) street.push_back(i);
    }
    if (street.size() >= 2) {
      const auto at = uniform_index(rng, street.size() - 1);
      std::swap(toks[street[at]], toks[street[at + 1]]);
    }
  }

  UnnormalizedAddress out;
  for (const auto& t : toks) {
    if (!out.raw.empty()) out.raw.push_back(' ');
    out.raw += t.text;
  }
  out.gold_id = addr.id;
  return out;
}

std::vector<UnnormalizedAddress> generate_queries(const std::vector<NormalizedAddress>& corpus, std::size_t n,
                                                  const NoiseConfig& noise, std::uint64_t seed) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "empty corpus");
  Rng rng(seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<UnnormalizedAddress> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % order.size() == 0) shuffle(order, rng);
    NoiseConfig per_query = noise;
    per_query.seed = mix_seed(noise.seed, i);
    out.push_back(derive_unnormalized(corpus[order[i % order.size()]], per_query));
  }
  return out;
}

DatasetSplit split_by_gold(const std::vector<UnnormalizedAddress>& queries, double biencoder_fraction,
                           double crossencoder_fraction, std::uint64_t seed) {
  if (biencoder_fraction < 0 || crossencoder_fraction < 0 || biencoder_fraction + crossencoder_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must be non-negative and sum to <= 1");
  }
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& q : queries) {
    if (!q.gold_id) throw Error(ErrorCode::kMissingGold, "query without gold id: " + q.raw);
    if (seen.insert(*q.gold_id).second) ids.push_back(*q.gold_id);
  }
  Rng rng(seed);
  shuffle(ids, rng);
  const auto n_bi = static_cast<std::size_t>(std::llround(biencoder_fraction * static_cast<double>(ids.size())));
  const auto n_ce = static_cast<std::size_t>(std::llround(crossencoder_fraction * static_cast<double>(ids.size())));
  std::unordered_map<std::string, int> part;
  for (std::size_t i = 0; i < ids.size(); ++i) part[ids[i]] = i < n_bi ? 0 : (i < n_bi + n_ce ? 1 : 2);
  DatasetSplit split;
  for (const auto& q : queries) {
    switch (part.at(*q.gold_id)) {
      case 0: split.biencoder.push_back(q); break;
      case 1: split.crossencoder.push_back(q); break;
      default: split.test.push_back(q); break;
    }
  }
  return split;
}

std::vector<GoldPair> resolve_gold(const std::vector<UnnormalizedAddress>& queries,
                                   const std::vector<NormalizedAddress>& corpus) {
  std::unordered_map<std::string, const NormalizedAddress*> by_id;
  for (const auto& a : corpus) by_id.emplace(a.id, &a);
  std::vector<GoldPair> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    const auto it = q.gold_id ? by_id.find(*q.gold_id) : by_id.end();
    if (it == by_id.end()) throw Error(ErrorCode::kMissingGold, "no gold address for '" + q.raw + "'");
    out.emplace_back(q, *it->second);
  }
  return out;
}

std::vector<TrainingPair> build_biencoder_pairs(const std::vector<GoldPair>& gold,
                                                const std::vector<NormalizedAddress>& corpus, std::uint64_t seed) {
  if (corpus.size() < 2) throw Error(ErrorCode::kInvalidArgument, "corpus needs at least two addresses");
  std::vector<std::string> renders, keys;
  std::vector<TokenList> token_sets;
  std::unordered_map<int, std::vector<std::size_t>> by_cp4;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    renders.push_back(render_normalized(corpus[i]));
    keys.push_back(door_key(corpus[i]));
    token_sets.push_back(sorted_unique_tokens(normalize_text(renders.back())));
    by_cp4[corpus[i].zip.cp4].push_back(i);
  }

  std::vector<TrainingPair> pairs;
  pairs.reserve(gold.size() * 2);
  for (std::size_t g = 0; g < gold.size(); ++g) {
    const auto& [query, gold_addr] = gold[g];
    Rng rng(mix_seed(seed, g));
    const std::string gold_render = render_normalized(gold_addr);
    const std::string gold_key = door_key(gold_addr);
    pairs.push_back({query.raw, gold_render, 1, NegCategory::kNone, false});

    const auto category = std::array{NegCategory::kEasy, NegCategory::kHard, NegCategory::kVeryHard}[uniform_index(rng, 3)];
    bool fallback = false;
    std::optional<std::size_t> chosen;

    auto hard = [&]() -> std::size_t {
      const auto gold_set = sorted_unique_tokens(normalize_text(gold_render));
      std::vector<std::size_t> above;
      std::size_t best = corpus.size();
      int best_score = -1;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (keys[i] == gold_key) continue;
        const int score = token_set_ratio_sorted(gold_set, token_sets[i]).value;
        if (score > 80) above.push_back(i);
        if (score > best_score) {
          best_score = score;
          best = i;
        }
      }
      if (!above.empty()) return above[uniform_index(rng, above.size())];
      fallback = true;
      return best;
    };

    if (category == NegCategory::kVeryHard) {
      std::vector<std::size_t> same_zip;
      for (std::size_t i : by_cp4[gold_addr.zip.cp4]) {
        if (keys[i] != gold_key) same_zip.push_back(i);
      }
      if (!same_zip.empty()) {
        chosen = same_zip[uniform_index(rng, same_zip.size())];
      } else {
        fallback = true;
        const auto h = hard();
        if (h < corpus.size()) chosen = h;
      }
    } else if (category == NegCategory::kHard) {
      const auto h = hard();
      if (h < corpus.size()) chosen = h;
    }
    if (!chosen) {
      if (category != NegCategory::kEasy) fallback = true;
      std::vector<std::size_t> pool;
      for (int attempt = 0; attempt < 64 && !chosen; ++attempt) {
        const auto i = uniform_index(rng, corpus.size());
        if (keys[i] != gold_key) chosen = i;
      }
      if (!chosen) {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          if (keys[i] != gold_key) pool.push_back(i);
        }
        if (pool.empty()) throw Error(ErrorCode::kDegenerateData, "every corpus address shares the gold door key");
        chosen = pool[uniform_index(rng, pool.size())];
      }
    }
    pairs.push_back({query.raw, renders[*chosen], 0, category, fallback});
  }
  return pairs;
}

std::vector<TrainingPair> build_crossencoder_pairs(const std::vector<GoldPair>& gold, const MatchEngine& engine,
                                                   std::uint64_t seed, const PipelineConfig& retrieval) {
  std::vector<std::size_t> order(gold.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);

  std::vector<TrainingPair> pairs;
  pairs.reserve(gold.size() * 10);
  std::vector<std::string> annotations;
  for (std::size_t g : order) {
    const auto& [query, gold_addr] = gold[g];
    const std::string gold_key = door_key(gold_addr);
    pairs.push_back({query.raw, render_normalized(gold_addr), 1, NegCategory::kNone, false});
    const auto view = make_query_view(query.raw);
    const auto e = engine.encode_query(query.raw, annotations);
    const auto candidates = engine.index().top_k(e.view(), engine.route(view, retrieval), retrieval.top_k);
    std::size_t negatives = 0;
    for (const auto& c : candidates) {
      if (negatives == 9) break;
      const auto* addr = engine.index().address(c.id);
      if (door_key(*addr) == gold_key) continue;
      pairs.push_back({query.raw, render_normalized(*addr), 0, NegCategory::kRetrievedTopK, false});
      ++negatives;
    }
  }
  return pairs;
}

}  // namespace addrmatch
