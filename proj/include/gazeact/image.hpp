#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace gazeact {

// Grayscale frame, intensities in [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), pixels(w * h, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

// Rec. 601 luma.
inline float luma601(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

// PGM/PPM (P2, P3, P5, P6; 8 or 16 bit) and PNG. Colour is reduced to luma.
GrayImage load_image(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const GrayImage& image);

// Numbered frame files (*.pgm, *.ppm, *.png) of a directory in name order.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

}  // namespace gazeact
