#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pseudoris/errors.hpp"

namespace pseudoris {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using PixelGrid = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Inclusive pixel rectangle; x indexes columns, y indexes rows.
struct PixelBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool operator==(const PixelBox&) const = default;
};

// 8-bit RGB raster stored as one Eigen array per channel (rows = height).
struct Image {
  std::string id;
  int width = 0;
  int height = 0;
  std::array<PixelGrid, 3> channels;

  static Image blank(std::string id, int width, int height);
};

// Binary segmentation mask with its cached tight bounding box and area.
struct BinaryMask {
  int width = 0;
  int height = 0;
  BoolGrid bits;  // rows = height, cols = width
  PixelBox bbox;
  std::int64_t area = 0;

  // Builds a mask from a bit grid, deriving bbox and area.
  static BinaryMask from_bits(BoolGrid bits);

  bool same_shape(const BinaryMask& other) const {
    return width == other.width && height == other.height;
  }
};

// Column-major run-length encoding. Runs alternate starting with a zero-run,
// so the leading count may be 0; counts always sum to height * width.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::int64_t> counts;
};

// Crop geometry: per-side margin as a fraction of the bbox side length, and
// whether out-of-mask pixels are zeroed first.
struct CropSpec {
  double margin = 0.0;
  bool masked = false;

  bool operator==(const CropSpec&) const = default;
};

// The four canonical crops: 0%, 10%, 20% margins plus 0% with background
// zeroed out.
std::vector<CropSpec> canonical_crop_specs();

// Image region cropped around one mask.
struct Patch {
  std::array<PixelGrid, 3> pixels;
  int source_mask_index = -1;
  CropSpec spec;
  PixelBox crop_box;

  int width() const { return static_cast<int>(pixels[0].cols()); }
  int height() const { return static_cast<int>(pixels[0].rows()); }
};

// Intersection-over-union of two same-sized masks.
double iou(const BinaryMask& a, const BinaryMask& b);

// For each coarse mask, picks the fine mask with the highest IoU (ties go to
// the lowest fine index), then drops duplicate picks keeping the first.
std::vector<BinaryMask> reduce_masks(const std::vector<BinaryMask>& fine,
                                     const std::vector<BinaryMask>& coarse);

// Crops the mask's bbox out of the image, expanded per CropSpec. Margins are
// rounded to the nearest pixel and clamped to the image bounds.
Patch crop(const Image& image, const BinaryMask& mask, const CropSpec& spec,
           int source_mask_index = -1);

Rle rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const Rle& rle);

}  // namespace pseudoris
