#pragma once

// Bundled reference data: a product-type list with departments and a seed
// topic catalog for demos, the CLI and tests.

#include <string>
#include <string_view>
#include <vector>

#include "reviewkit/catalog.hpp"

namespace reviewkit::data {

inline const std::vector<catalog::ProductType>& bundled_product_types() {
  static const std::vector<catalog::ProductType> types = {
      {"Wine Glasses", "Wine Glasses", "Home", ""},
      {"Champagne Glasses", "Champagne Glasses", "Home", ""},
      {"Drinking Glasses", "Drinking Glasses", "Home", ""},
      {"Coffee Mugs", "Coffee Mugs", "Home", ""},
      {"Garbage Bags", "Garbage Bags", "Home", ""},
      {"Stick Vacuums", "Stick Vacuums", "Home",
       "Cordless stick vacuum with strong suction for carpets and hard floors. The suction "
       "stays strong as the battery drains. Swap the battery in seconds and keep cleaning."},
      {"Robot Vacuums", "Robot Vacuums", "Home", ""},
      {"Bed Pillows", "Bed Pillows", "Home", ""},
      {"Bath Towels", "Bath Towels", "Home", ""},
      {"3D Glasses", "3D Glasses", "Electronics", ""},
      {"Televisions", "Televisions", "Electronics", ""},
      {"Headphones", "Headphones", "Electronics", ""},
      {"Camera Straps", "Camera Straps", "Electronics", ""},
      {"Camera Bags", "Camera Bags", "Electronics", ""},
      {"Digital Cameras", "Digital Cameras", "Electronics", ""},
      {"Smartwatches", "Smartwatches", "Electronics", ""},
      {"Pajamas", "Pajamas", "Apparel", ""},
      {"Ruffled Tops", "Ruffled Tops", "Apparel", ""},
      {"Rain Jackets", "Rain Jackets", "Apparel", ""},
      {"Sunglasses", "Sunglasses", "Apparel", ""},
      {"Reading Glasses", "Reading Glasses", "Health", ""},
      {"Perfumes", "Perfumes", "Beauty", ""},
      {"Beauty Supply Making Exfoliants", "Beauty Supply Making Exfoliants", "Beauty", ""},
      {"Face Moisturizers", "Face Moisturizers", "Beauty", ""},
      {"Shampoo", "Shampoo", "Beauty", ""},
      {"Stuffed Toys & Animals", "Stuffed Toys & Animals", "Toys", ""},
      {"Building Blocks", "Building Blocks", "Toys", ""},
      {"Board Games", "Board Games", "Toys", ""},
      {"Spectrometers", "Spectrometers", "Industrial & Scientific", ""},
      {"Microscopes", "Microscopes", "Industrial & Scientific", ""},
  };
  return types;
}

namespace detail {

struct SeedTopic {
  std::string_view label;
  std::vector<std::string> synonyms;
};

struct SeedEntry {
  std::string_view product_type;
  catalog::TopicSource source;
  std::vector<SeedTopic> topics;  // best first
};

inline const std::vector<SeedEntry>& seed_entries() {
  using catalog::TopicSource;
  static const std::vector<SeedEntry> entries = {
      {"Pajamas", TopicSource::mined,
       {{"comfort", {"comfortable", "comfy"}}, {"softness", {"soft"}}, {"fit", {}}, {"material", {"fabric"}},
        {"quality", {}}, {"price", {"cost"}}, {"color", {"colour"}}, {"style", {}}, {"design", {}},
        {"appearance", {"look"}}}},
      {"Televisions", TopicSource::mined,
       {{"picture", {"image"}}, {"quality", {}}, {"price", {"cost"}}, {"sound", {"audio"}},
        {"ease of installation", {"installation", "setup"}}, {"screen", {"display"}}, {"color", {"colour"}},
        {"remote", {"remote control"}}, {"accessories", {}}, {"connection", {"connectivity", "wifi"}}}},
      {"Spectrometers", TopicSource::llm,
       {{"sensitivity", {}}, {"wavelength range", {"wavelength"}}, {"software", {}}, {"ease of use", {}},
        {"versatility", {}}, {"reliability", {}}, {"price", {"cost"}}, {"customer service", {"support"}},
        {"quality", {}}, {"battery life", {"battery"}}}},
      {"Garbage Bags", TopicSource::mined,
       {{"sturdiness", {"sturdy"}}, {"durability", {"durable"}}, {"strength", {"strong"}}, {"smell", {"odor"}},
        {"leak", {"leaks", "leaking"}}, {"price", {"cost"}}, {"size", {}}, {"ease of use", {}},
        {"material", {"plastic"}}, {"tie", {"drawstring", "ties"}}}},
      {"Beauty Supply Making Exfoliants", TopicSource::llm,
       {{"gentle", {}}, {"smooth", {"smoothness"}}, {"natural", {}}, {"feel", {}}, {"hydrating", {"hydration"}},
        {"brightening", {}}, {"smell", {"scent"}}, {"moisturizing", {}}, {"consistency", {"texture"}},
        {"irritation", {}}}},
      {"Camera Straps", TopicSource::mined,
       {{"feel", {"texture"}}, {"features", {"functionality", "functionalities"}}, {"strap", {"sling", "band"}},
        {"price", {"cost", "value"}}, {"comfort", {"comfortable"}}, {"length", {"adjustable"}},
        {"durability", {"durable"}}, {"material", {"leather", "nylon"}}, {"buckle", {"clasp"}},
        {"attachment", {"connector"}}}},
      {"Perfumes", TopicSource::mined,
       {{"smell", {"scent", "fragrance", "aroma"}}, {"price", {"cost", "value"}}, {"quality", {}}, {"sweet", {}},
        {"long lasting", {"longevity", "staying power"}}, {"over powering", {"overpowering"}},
        {"warm", {"warmth"}}, {"bottle", {}}, {"packaging", {}}, {"gift", {}}}},
      {"Stuffed Toys & Animals", TopicSource::mined,
       {{"size", {"dimensions"}}, {"softness", {"soft"}}, {"quality", {"craftsmanship"}},
        {"carry", {"portability", "portable"}}, {"baby", {}}, {"price", {"cost"}}, {"as a gift", {"gift"}},
        {"color", {"colour"}}, {"learning", {}}, {"appearance", {"look"}}}},
      {"Ruffled Tops", TopicSource::mined,
       {{"fit", {}}, {"material", {"fabric"}}, {"color", {"colour", "hue"}}, {"comfort", {"comfortable"}},
        {"appearance", {"look", "design"}}, {"flattering", {}}, {"wash", {"washing"}}, {"stretch", {}},
        {"size", {"sizing"}}, {"style", {}}}},
      {"Rain Jackets", TopicSource::mined,
       {{"waterproof", {"water resistant", "waterproofing"}}, {"hood", {}}, {"fit", {}}, {"zipper", {"zip"}},
        {"breathability", {"breathable"}}, {"pockets", {"pocket"}}, {"warmth", {"warm"}}, {"size", {}},
        {"weight", {}}, {"price", {"cost"}}}},
      {"Stick Vacuums", TopicSource::mined,
       {{"suction", {"suction power"}}, {"battery life", {"battery", "batteries"}}, {"weight", {}},
        {"noise", {"loud", "quiet"}}, {"attachments", {"attachment"}}, {"dust bin", {"bin"}},
        {"price", {"cost"}}, {"charging", {"charger"}}, {"ease of use", {}}, {"filter", {}}}},
      {"Headphones", TopicSource::mined,
       {{"sound", {"audio"}}, {"comfort", {"comfortable"}}, {"battery life", {"battery"}},
        {"noise cancellation", {"noise cancelling", "anc"}}, {"bass", {}}, {"fit", {}},
        {"connection", {"bluetooth", "pairing"}}, {"price", {"cost"}}, {"microphone", {"mic"}},
        {"durability", {"durable"}}}},
      {"Smartwatches", TopicSource::mined,
       {{"battery life", {"battery"}}, {"screen", {"display"}}, {"fitness tracking", {"tracking"}},
        {"notifications", {}}, {"band", {"strap"}}, {"app", {"apps"}}, {"price", {"cost"}},
        {"water resistance", {"swimming"}}, {"heart rate", {}}, {"gps", {}}}},
  };
  return entries;
}

}  // namespace detail

/// Seed catalog. Topic supports are synthetic (10 down to 1) so the curated
/// order survives ranking.
inline catalog::TopicCatalog bundled_catalog() {
  catalog::TopicCatalog cat;
  for (const auto& entry : detail::seed_entries()) {
    catalog::TopicList topics;
    std::size_t support = entry.topics.size();
    for (const auto& t : entry.topics)
      topics.push_back(catalog::make_topic(t.label, t.synonyms, support--, entry.source));
    cat.entries[std::string(entry.product_type)] = catalog::rank_topics(std::move(topics));
  }
  return cat;
}

}  // namespace reviewkit::data
