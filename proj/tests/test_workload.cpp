#include <gtest/gtest.h>

#include <sstream>

#include "foldmap/error.hpp"
#include "foldmap/workload.hpp"
#include "test_support.hpp"

namespace foldmap {
namespace {

ConvLayerSpec square(int size, int kernel, int stride, int pad, int channels = 1, int filters = 1) {
  return ConvLayerSpec{.name = "t",
                       .batch_n = 1,
                       .in_channels = channels,
                       .in_height = size,
                       .in_width = size,
                       .num_filters = filters,
                       .kern_height = kernel,
                       .kern_width = kernel,
                       .stride = stride,
                       .pad = pad};
}

TEST(DeriveOutputDims, WorkedExampleKeepsFiveByFive) {
  EXPECT_EQ(derive_output_dims(square(5, 3, 1, 1)), (OutputDims{5, 5}));
}

TEST(DeriveOutputDims, VggFirstLayerKeepsSize) {
  EXPECT_EQ(derive_output_dims(square(224, 3, 1, 1)), (OutputDims{224, 224}));
}

TEST(DeriveOutputDims, StrideTwo) { EXPECT_EQ(derive_output_dims(square(5, 3, 2, 1)), (OutputDims{3, 3})); }

TEST(DeriveOutputDims, HeightAndWidthAreIndependent) {
  ConvLayerSpec l = square(6, 3, 1, 0);
  l.in_width = 9;
  l.kern_width = 1;
  // Q from X and R, P from Y and S.
  EXPECT_EQ(derive_output_dims(l), (OutputDims{.out_height = 4, .out_width = 9}));
}

TEST(DeriveOutputDims, RejectsStrideThatDoesNotDivide) {
  EXPECT_THROW(derive_output_dims(square(6, 3, 2, 0)), ConfigError);
}

TEST(DeriveOutputDims, RejectsBadDimensions) {
  EXPECT_THROW(derive_output_dims(square(0, 1, 1, 0)), ConfigError);
  EXPECT_THROW(derive_output_dims(square(4, 3, 1, -1)), ConfigError);
  EXPECT_THROW(derive_output_dims(square(2, 5, 1, 0)), ConfigError);
}

TEST(ReferenceConvolution, IdentityKernel) {
  ConvLayerSpec l = square(4, 1, 1, 0);
  const Tensor4D input = testing::patterned(l.input_shape(), 3, 1);
  const Tensor4D filters(l.filter_shape(), 1.0f);
  EXPECT_EQ(reference_convolution(input, filters, l), input);
}

TEST(ReferenceConvolution, ZeroFilters) {
  ConvLayerSpec l = square(5, 3, 1, 1, 2, 3);
  const Tensor4D input = testing::patterned(l.input_shape(), 3, 1);
  const Tensor4D out = reference_convolution(input, Tensor4D(l.filter_shape()), l);
  for (float v : out.values()) EXPECT_EQ(v, 0.0f);
}

TEST(ReferenceConvolution, MatchesHandEnumeratedDotProduct) {
  const ConvLayerSpec l = testing::worked_example_layer();
  const Tensor4D input = testing::patterned(l.input_shape(), 7, 3);
  const Tensor4D filters = testing::patterned(l.filter_shape(), 5, 1);
  const Tensor4D out = reference_convolution(input, filters, l);
  // 36-term dot products enumerated over an explicitly padded copy.
  EXPECT_EQ(out.at(0, 0, 0, 0), -15.0f);
  EXPECT_EQ(out.at(0, 3, 2, 4), -150.0f);
}

TEST(ReferenceConvolution, ShapeMismatchThrows) {
  const ConvLayerSpec l = testing::worked_example_layer();
  EXPECT_THROW(reference_convolution(Tensor4D({1, 3, 5, 5}), Tensor4D(l.filter_shape()), l), ShapeError);
  EXPECT_THROW(reference_convolution(Tensor4D(l.input_shape()), Tensor4D({4, 4, 3, 2}), l), ShapeError);
}

TEST(ReferenceConvolution, Linearity) {
  const ConvLayerSpec l = square(6, 3, 1, 1, 3, 2);
  const Tensor4D input = testing::patterned(l.input_shape(), 7, 2);
  const Tensor4D filters = testing::patterned(l.filter_shape(), 5, 4);
  Tensor4D scaled = input;
  for (float& v : scaled.values()) v *= 3.0f;
  Tensor4D expected = reference_convolution(input, filters, l);
  for (float& v : expected.values()) v *= 3.0f;
  EXPECT_EQ(reference_convolution(scaled, filters, l), expected);
}

TEST(ReferenceConvolution, TranslationByStride) {
  // pad 0: dropping the first `stride` input columns drops the first output column.
  ConvLayerSpec l = square(9, 3, 2, 0, 2, 2);
  const Tensor4D input = testing::patterned(l.input_shape(), 7, 5);
  const Tensor4D filters = testing::patterned(l.filter_shape(), 3, 1);
  const Tensor4D out = reference_convolution(input, filters, l);

  ConvLayerSpec shifted = l;
  shifted.in_width = l.in_width - l.stride;
  Tensor4D cropped(shifted.input_shape());
  for (int c = 0; c < l.in_channels; ++c)
    for (int h = 0; h < l.in_height; ++h)
      for (int w = 0; w < shifted.in_width; ++w) cropped.at(0, c, h, w) = input.at(0, c, h, w + l.stride);
  const Tensor4D out_shifted = reference_convolution(cropped, filters, shifted);
  for (int f = 0; f < l.num_filters; ++f)
    for (int q = 0; q < out_shifted.extent(2); ++q)
      for (int p = 0; p < out_shifted.extent(3); ++p) EXPECT_EQ(out_shifted.at(0, f, q, p), out.at(0, f, q, p + 1));
}

TEST(ReferenceConvolution, ParallelMatchesSerialBitwise) {
  ConvLayerSpec l = square(10, 3, 1, 1, 4, 6);
  l.batch_n = 2;
  const Tensor4D input = random_tensor(l.input_shape(), DataMode::kFloat32, 3);
  const Tensor4D filters = random_tensor(l.filter_shape(), DataMode::kFloat32, 4);
  EXPECT_EQ(reference_convolution_parallel(input, filters, l), reference_convolution(input, filters, l));
}

TEST(Suites, Synthetic) {
  const auto suite = synthetic_suite();
  ASSERT_EQ(suite.size(), 4u);
  EXPECT_EQ(suite[0].input_shape(), (Tensor4D::Shape{1, 64, 56, 56}));
  EXPECT_EQ(suite[0].filter_shape(), (Tensor4D::Shape{64, 64, 3, 3}));
  EXPECT_EQ(suite[1].filter_shape(), (Tensor4D::Shape{128, 128, 3, 3}));
  EXPECT_EQ(suite[3].input_shape(), (Tensor4D::Shape{1, 512, 56, 56}));
  EXPECT_EQ(suite[3].filter_shape(), (Tensor4D::Shape{512, 512, 3, 3}));
  for (const auto& l : suite) {
    EXPECT_EQ(l.stride, 1);
    EXPECT_EQ(l.pad, 1);
  }
}

TEST(Suites, Vgg16) {
  const auto suite = vgg16_suite();
  ASSERT_EQ(suite.size(), 13u);
  EXPECT_EQ(suite.front().name, "1.1");
  EXPECT_EQ(suite.front().input_shape(), (Tensor4D::Shape{1, 3, 224, 224}));
  EXPECT_EQ(suite.front().filter_shape(), (Tensor4D::Shape{64, 3, 3, 3}));
  EXPECT_EQ(suite.back().name, "5.3");
  EXPECT_EQ(suite.back().input_shape(), (Tensor4D::Shape{1, 512, 14, 14}));
  EXPECT_EQ(suite.back().filter_shape(), (Tensor4D::Shape{512, 512, 3, 3}));
}

TEST(Suites, UnknownNameThrows) { EXPECT_THROW(suite_by_name("resnet"), ConfigError); }

TEST(TotalOps, Vgg16) { EXPECT_EQ(total_ops(vgg16_suite()), 30'693'261'312); }

TEST(TotalOps, SingleWeight) {
  const ConvLayerSpec l = square(1, 1, 1, 0);
  EXPECT_EQ(total_ops(std::span(&l, 1)), 2);
}

TEST(TotalOps, LargestSyntheticLayer) {
  const auto suite = synthetic_suite();
  EXPECT_EQ(total_ops(std::span(&suite[3], 1)), 14'797'504'512);
}

TEST(LayerFile, RoundTrip) {
  const auto layers = small_suite();
  std::stringstream text;
  write_layer_file(text, layers);
  EXPECT_EQ(parse_layer_file(text), layers);
}

TEST(LayerFile, SkipsCommentsAndBlankLines) {
  std::istringstream text("# header\n\nconv, 1, 2, 5, 5, 3, 3, 3, 1, 1  # trailing\n");
  const auto layers = parse_layer_file(text);
  ASSERT_EQ(layers.size(), 1u);
  EXPECT_EQ(layers[0].name, "conv");
  EXPECT_EQ(layers[0].num_filters, 3);
}

TEST(LayerFile, ErrorsNameTheLine) {
  std::istringstream text("a, 1, 1, 4, 4, 1, 1, 1, 1, 0\nb, 1, x, 4, 4, 1, 1, 1, 1, 0\n");
  try {
    parse_layer_file(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LayerFile, InlineLayerWithoutName) {
  const ConvLayerSpec l = parse_layer_line("1,1,1,1,1,1,1,1,0");
  EXPECT_EQ(l.name, "custom");
  EXPECT_EQ(l.kern_width, 1);
}

}  // namespace
}  // namespace foldmap
