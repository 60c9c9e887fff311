// Writes the synthetic Miyajima-like dataset used by the tests and examples.
// Output is deterministic; the committed copy lives in data/synthetic/.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cryptic/corpus.hpp"
#include "cryptic/csv.hpp"
#include "cryptic/image.hpp"
#include "cryptic/rng.hpp"

namespace {

namespace fs = std::filesystem;
using cryptic::RgbImage;
using cryptic::Rng;

struct Color {
  int r, g, b;
};

void put(RgbImage& img, int x, int y, Color c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.at(x, y);
  p[0] = static_cast<std::uint8_t>(std::clamp(c.r, 0, 255));
  p[1] = static_cast<std::uint8_t>(std::clamp(c.g, 0, 255));
  p[2] = static_cast<std::uint8_t>(std::clamp(c.b, 0, 255));
}

void vertical_gradient(RgbImage& img, Color top, Color bottom) {
  for (int y = 0; y < img.height; ++y) {
    const double t = img.height > 1 ? double(y) / (img.height - 1) : 0.0;
    const Color c{int(top.r + t * (bottom.r - top.r)), int(top.g + t * (bottom.g - top.g)),
                  int(top.b + t * (bottom.b - top.b))};
    for (int x = 0; x < img.width; ++x) put(img, x, y, c);
  }
}

void rect(RgbImage& img, int x0, int y0, int x1, int y1, Color c) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) put(img, x, y, c);
}

void disc(RgbImage& img, double cx, double cy, double r, Color c) {
  for (int y = int(cy - r) - 1; y <= int(cy + r) + 1; ++y)
    for (int x = int(cx - r) - 1; x <= int(cx + r) + 1; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) put(img, x, y, c);
}

// Isosceles triangle with apex at (cx, top) and base on y = bottom.
void triangle(RgbImage& img, double cx, int top, int bottom, double half_base, Color c) {
  for (int y = top; y < bottom; ++y) {
    const double w = half_base * (y - top) / std::max(1, bottom - top);
    for (int x = int(cx - w); x <= int(cx + w); ++x) put(img, x, y, c);
  }
}

constexpr int kSide = 96;

RgbImage torii() {
  RgbImage img(kSide, kSide);
  vertical_gradient(img, {120, 170, 220}, {40, 90, 140});
  const Color red{200, 40, 30};
  rect(img, 10, 18, 86, 26, red);
  rect(img, 16, 32, 80, 37, red);
  rect(img, 24, 26, 32, 90, red);
  rect(img, 64, 26, 72, 90, red);
  rect(img, 0, 80, 96, 96, {30, 60, 100});
  return img;
}

RgbImage pagoda() {
  RgbImage img(kSide, kSide);
  vertical_gradient(img, {230, 230, 240}, {160, 200, 150});
  for (int tier = 0; tier < 5; ++tier) {
    const int y = 14 + tier * 14;
    triangle(img, 48, y, y + 8, 14 + tier * 5, {60, 40, 30});
    rect(img, 40 - tier, y + 8, 56 + tier, y + 14, {190, 70, 40});
  }
  rect(img, 46, 4, 50, 16, {80, 80, 80});
  return img;
}

RgbImage shrine() {
  RgbImage img(kSide, kSide);
  vertical_gradient(img, {250, 200, 150}, {80, 60, 60});
  triangle(img, 48, 20, 44, 46, {70, 50, 40});
  rect(img, 14, 44, 82, 74, {230, 120, 60});
  for (int x = 18; x < 80; x += 12) rect(img, x, 46, x + 4, 74, {250, 240, 230});
  rect(img, 0, 74, 96, 96, {120, 110, 100});
  return img;
}

RgbImage bridge() {
  RgbImage img(kSide, kSide);
  vertical_gradient(img, {170, 210, 240}, {170, 210, 240});
  rect(img, 0, 60, 96, 96, {40, 100, 130});
  for (int x = 0; x < kSide; ++x) {
    const double t = (x - 48.0) / 48.0;
    const int y = int(56 - 24 * (1 - t * t));
    rect(img, x, y, x + 1, y + 6, {200, 50, 40});
  }
  for (int x = 8; x < 90; x += 16) rect(img, x, 40, x + 3, 62, {200, 50, 40});
  return img;
}

RgbImage lantern() {
  RgbImage img(kSide, kSide);
  vertical_gradient(img, {20, 20, 40}, {50, 40, 40});
  rect(img, 36, 70, 60, 90, {140, 140, 130});
  rect(img, 42, 50, 54, 70, {150, 150, 140});
  disc(img, 48, 40, 14, {255, 210, 120});
  triangle(img, 48, 14, 30, 22, {130, 130, 120});
  disc(img, 48, 40, 6, {255, 255, 220});
  return img;
}

RgbImage mountain() {
  RgbImage img(kSide, kSide);
  vertical_gradient(img, {250, 170, 120}, {200, 120, 160});
  triangle(img, 30, 24, 80, 40, {60, 90, 60});
  triangle(img, 66, 12, 80, 46, {40, 70, 50});
  disc(img, 80, 20, 8, {255, 250, 200});
  rect(img, 0, 80, 96, 96, {30, 50, 40});
  return img;
}

// Landmark photo: the reference shifted, re-exposed, noisy, padded wider.
RgbImage photo_of(const RgbImage& ref, Rng& rng) {
  const int dx = int(rng.index(5)) - 2;
  const int dy = int(rng.index(5)) - 2;
  const int gain = int(rng.index(13)) - 6;
  const int pad = 8 + int(rng.index(9));
  RgbImage img(ref.width + 2 * pad, ref.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int sx = std::clamp(x - pad - dx, 0, ref.width - 1);
      const int sy = std::clamp(y - dy, 0, ref.height - 1);
      const auto* p = ref.at(sx, sy);
      const int n = int(rng.index(9)) - 4;
      put(img, x, y, {p[0] + gain + n, p[1] + gain + n, p[2] + gain + n});
    }
  }
  return img;
}

// Unrelated scene: random sky/ground split, a handful of random shapes.
RgbImage random_scene(Rng& rng) {
  const int w = 80 + int(rng.index(41));
  const int h = 80 + int(rng.index(41));
  RgbImage img(w, h);
  auto color = [&] {
    return Color{int(rng.index(256)), int(rng.index(256)), int(rng.index(256))};
  };
  vertical_gradient(img, color(), color());
  const int shapes = 3 + int(rng.index(5));
  for (int s = 0; s < shapes; ++s) {
    const int x = int(rng.index(std::size_t(w)));
    const int y = int(rng.index(std::size_t(h)));
    const int size = 6 + int(rng.index(30));
    switch (rng.index(3)) {
      case 0: rect(img, x, y, x + size, y + size / 2 + 2, color()); break;
      case 1: disc(img, x, y, size / 2.0, color()); break;
      default: triangle(img, x, y, y + size, size / 2.0, color()); break;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = img.at(x, y);
      const int n = int(rng.index(21)) - 10;
      put(img, x, y, {p[0] + n, p[1] + n, p[2] + n});
    }
  }
  return img;
}

struct Spot {
  const char* name;
  double lat, lon;
};

// Famous spots line up with the landmark images; hidden spots do not.
const Spot kFamous[6] = {
    {"Otorii Gate", 34.2963, 132.3188},        {"Five-storied Pagoda", 34.2966, 132.3210},
    {"Itsukushima Shrine", 34.2959, 132.3198}, {"Sorihashi Bridge", 34.2952, 132.3193},
    {"Toro Lantern Row", 34.2970, 132.3202},   {"Mt. Misen", 34.2790, 132.3200},
};
const Spot kHidden[6] = {
    {"Tsutsumigaura Beach", 34.3190, 132.3380}, {"Omoto Park", 34.2870, 132.3070},
    {"Machiya Street", 34.2978, 132.3225},      {"Momijidani Stream", 34.2925, 132.3260},
    {"Daishoin Steps", 34.2935, 132.3195},      {"宮島 裏参道", 34.2982, 132.3232},
};

const char* kVocabulary[] = {"torii", "shrine", "pagoda", "itsukushima", "momiji", "misen",
                             "lantern", "tide", "bridge", "deer", "sunset", "ropeway",
                             "temple", "oyster", "vermilion"};

// Comments with dense vocabulary use vs. plain chatter.
const char* kRichComments[] = {
    "The vermilion torii at high tide, shrine lanterns glowing",
    "Quiet shrine path, deer and momiji, tide pools by the torii",
    "Pagoda and temple bells at sunset, lantern light, deer everywhere",
    "Misen ropeway view, sunset over the torii and the tide",
    "Oyster stalls then the bridge to the shrine, vermilion and momiji",
    "Hidden temple, momiji leaves, deer, and a lantern by the stream",
};
const char* kPlainComments[] = {
    "Crowded today, waited a long time",
    "Nothing special, just walked past",
    "It rained so we went home early",
    "Parking was hard to find",
    "Ate ice cream and took a break",
    "Too hot, my feet hurt",
};

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_synthetic <out-dir>\n";
    return 2;
  }
  const fs::path out = argv[1];
  fs::create_directories(out / "landmarks");
  fs::create_directories(out / "photos");

  const std::pair<const char*, RgbImage> landmarks[6] = {
      {"torii", torii()},   {"pagoda", pagoda()},   {"shrine", shrine()},
      {"bridge", bridge()}, {"lantern", lantern()}, {"misen", mountain()},
  };
  std::string manifest = "landmark_id,filename\n";
  for (const auto& [id, img] : landmarks) {
    const std::string file = std::string(id) + ".png";
    const auto bytes = cryptic::encode_png(img);
    cryptic::write_text_file(out / "landmarks" / file,
                             std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    manifest += std::string(id) + "," + file + "\n";
  }
  cryptic::write_text_file(out / "landmarks" / "manifest.csv", manifest);

  Rng rng(20120901);
  std::vector<cryptic::SubjectiveRecord> records;
  std::string labels = "id,category\n";
  std::string exemplars = "id,category\n";

  // 24 landmark photos (4 per landmark), 36 unrelated scenes.
  for (int i = 0; i < 60; ++i) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "r%02d", i + 1);
    const bool landmark_photo = i < 24;
    const int k = landmark_photo ? i / 4 : (i - 24) % 6;
    RgbImage img = landmark_photo ? photo_of(landmarks[k].second, rng) : random_scene(rng);
    const bool jpeg = i % 10 == 9;
    char fbuf[32];
    std::snprintf(fbuf, sizeof fbuf, "p%02d.%s", i + 1, jpeg ? "jpg" : "png");
    const auto bytes = jpeg ? cryptic::encode_jpeg(img, 92) : cryptic::encode_png(img);
    cryptic::write_text_file(out / "photos" / fbuf,
                             std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));

    const int category = landmark_photo ? 1 : 2;
    labels += std::string(fbuf) + "," + std::to_string(category) + "\n";
    // every third photo of each kind is a labelled exemplar
    if (i % 3 == 0) exemplars += std::string(fbuf) + "," + std::to_string(category) + "\n";

    cryptic::SubjectiveRecord r;
    r.id = idbuf;
    const Spot& spot = landmark_photo ? kFamous[k] : kHidden[k];
    // whole micro-degrees so the CSV shows six decimals
    r.lat = std::round(spot.lat * 1e6 + double(rng.index(2001)) - 1000.0) / 1e6;
    r.lon = std::round(spot.lon * 1e6 + double(rng.index(2001)) - 1000.0) / 1e6;
    r.location_name = spot.name;
    r.photo = fbuf;
    // Famous: rich + high; Cryptic: hidden spot, rich + high;
    // LowInterest: hidden, plain + low; the rest mixed.
    const int slot = i % 4;
    bool rich = true;
    int eval = 4;
    if (landmark_photo) {
      rich = slot != 3;
      eval = slot == 2 ? 1 : 3 + int(rng.index(2));
    } else {
      const int h = (i - 24) % 3;
      rich = h == 0 || slot == 1;
      eval = h == 0 ? 3 + int(rng.index(2)) : (h == 1 ? int(rng.index(2)) : 2 + int(rng.index(3)));
    }
    r.evaluation = eval;
    r.comment = rich ? kRichComments[rng.index(6)] : kPlainComments[rng.index(6)];
    records.push_back(r);
  }
  cryptic::write_text_file(out / "records.csv", cryptic::records_to_csv(records));
  cryptic::write_text_file(out / "photo_labels.csv", labels);
  cryptic::write_text_file(out / "exemplars.csv", exemplars);

  std::string vocab = "# landmark vocabulary, one term per line\n";
  for (const char* t : kVocabulary) vocab += std::string(t) + "\n";
  cryptic::write_text_file(out / "vocabulary.txt", vocab);

  cryptic::write_text_file(out / "config.ini", R"(; synthetic Miyajima-like fixture
[paths]
records = records.csv
images = photos
landmarks = landmarks
vocabulary = vocabulary.txt
exemplars = exemplars.csv

[signature]
grid_size = 63
levels = 8
trials = 32
aggregate = mean

[csaim]
g_max = 200
a = 30

[ghsom]
tau1 = 0.6
tau2 = 0.03
alpha_strat = 0.05

[discovery]
sim_hi = 0.6
tfidf_hi = 0.5
eval_hi = 0.75

[pipeline]
with_photos = true
)");
  std::cout << "wrote " << records.size() << " records to " << out << "\n";
  return 0;
}
