#include "pseudoris/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pseudoris {

Image Image::blank(std::string id, int width, int height) {
  if (width < 1 || height < 1) {
    throw UsageError("Image: width and height must be >= 1");
  }
  Image img;
  img.id = std::move(id);
  img.width = width;
  img.height = height;
  for (auto& ch : img.channels) ch = PixelGrid::Zero(height, width);
  return img;
}

BinaryMask BinaryMask::from_bits(BoolGrid bits) {
  BinaryMask m;
  m.height = static_cast<int>(bits.rows());
  m.width = static_cast<int>(bits.cols());
  m.bits = std::move(bits);
  m.area = m.bits.count();
  if (m.area > 0) {
    int x0 = m.width, x1 = -1, y0 = m.height, y1 = -1;
    for (int c = 0; c < m.width; ++c) {
      for (int r = 0; r < m.height; ++r) {
        if (m.bits(r, c)) {
          x0 = std::min(x0, c);
          x1 = std::max(x1, c);
          y0 = std::min(y0, r);
          y1 = std::max(y1, r);
        }
      }
    }
    m.bbox = {x0, y0, x1, y1};
  } else {
    m.bbox = {};
  }
  return m;
}

std::vector<CropSpec> canonical_crop_specs() {
  return {{0.0, false}, {0.1, false}, {0.2, false}, {0.0, true}};
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("iou: mask dimensions differ");
  }
  const auto inter = (a.bits && b.bits).count();
  const auto uni = (a.bits || b.bits).count();
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<BinaryMask> reduce_masks(const std::vector<BinaryMask>& fine,
                                     const std::vector<BinaryMask>& coarse) {
  if (coarse.empty()) return {};
  if (fine.empty()) {
    throw ConfigError("reduce_masks: no fine masks to select from");
  }
  std::vector<BinaryMask> out;
  std::set<std::size_t> chosen;
  for (const auto& c : coarse) {
    std::size_t best = 0;
    double best_iou = -1.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const double v = iou(fine[i], c);
      if (v > best_iou) {  // ties keep the lowest fine index
        best_iou = v;
        best = i;
      }
    }
    if (chosen.insert(best).second) {
      out.push_back(fine[best]);
    }
  }
  return out;
}

Patch crop(const Image& image, const BinaryMask& mask, const CropSpec& spec,
           int source_mask_index) {
  if (mask.width != image.width || mask.height != image.height) {
    throw ShapeError("crop: mask does not match image dimensions");
  }
  if (mask.area < 1) {
    throw UsageError("crop: mask is empty");
  }
  const PixelBox& bb = mask.bbox;
  const int dx = static_cast<int>(std::lround(spec.margin * bb.width()));
  const int dy = static_cast<int>(std::lround(spec.margin * bb.height()));
  PixelBox box;
  box.x0 = std::max(0, bb.x0 - dx);
  box.x1 = std::min(image.width - 1, bb.x1 + dx);
  box.y0 = std::max(0, bb.y0 - dy);
  box.y1 = std::min(image.height - 1, bb.y1 + dy);

  Patch p;
  p.source_mask_index = source_mask_index;
  p.spec = spec;
  p.crop_box = box;
  for (int ch = 0; ch < 3; ++ch) {
    PixelGrid g = image.channels[ch].block(box.y0, box.x0, box.height(), box.width());
    if (spec.masked) {
      const auto m = mask.bits.block(box.y0, box.x0, box.height(), box.width());
      g = m.select(g, PixelGrid::Zero(box.height(), box.width()));
    }
    p.pixels[ch] = std::move(g);
  }
  return p;
}

Rle rle_encode(const BinaryMask& mask) {
  Rle r;
  r.height = mask.height;
  r.width = mask.width;
  bool current = false;  // scan starts counting zeros
  std::int64_t run = 0;
  for (int c = 0; c < mask.width; ++c) {
    for (int row = 0; row < mask.height; ++row) {
      const bool v = mask.bits(row, c);
      if (v == current) {
        ++run;
      } else {
        r.counts.push_back(run);
        current = v;
        run = 1;
      }
    }
  }
  r.counts.push_back(run);
  return r;
}

BinaryMask rle_decode(const Rle& rle) {
  if (rle.height < 1 || rle.width < 1) {
    throw DataError("rle_decode: invalid size");
  }
  std::int64_t total = 0;
  for (const auto c : rle.counts) {
    if (c < 0) throw DataError("rle_decode: negative run length");
    total += c;
  }
  const std::int64_t expected =
      static_cast<std::int64_t>(rle.height) * rle.width;
  if (total != expected) {
    throw DataError("rle_decode: counts sum to " + std::to_string(total) +
                    ", expected " + std::to_string(expected));
  }
  BoolGrid bits = BoolGrid::Constant(rle.height, rle.width, false);
  std::int64_t pos = 0;
  bool value = false;
  for (const auto count : rle.counts) {
    for (std::int64_t i = 0; i < count; ++i, ++pos) {
      const int col = static_cast<int>(pos / rle.height);
      const int row = static_cast<int>(pos % rle.height);
      bits(row, col) = value;
    }
    value = !value;
  }
  return BinaryMask::from_bits(std::move(bits));
}

}  // namespace pseudoris
