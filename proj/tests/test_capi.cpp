// Exercises the shared library through its C header only.
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "cdconv/cdconv.h"
#include "doctest.h"

TEST_SUITE("capi") {
  TEST_CASE("line fixture convolution") {
    const double src[] = {0.0, 1.0};
    const double qry[] = {0.5};
    const double feat[] = {2.0, 3.0};
    const double theta[] = {1.0, 1.0};
    cdc_cloud *a = nullptr, *b = nullptr;
    REQUIRE(cdc_cloud_create(1, src, 2, &a) == CDC_OK);
    REQUIRE(cdc_cloud_create(1, qry, 1, &b) == CDC_OK);
    cdc_neighborhood* nb = nullptr;
    REQUIRE(cdc_ball_search(a, b, 1.0, &nb) == CDC_OK);
    CHECK(cdc_neighborhood_num_edges(nb) == 2);
    cdc_tensor* t = nullptr;
    REQUIRE(cdc_tensor_build(nb, 1, 0, &t) == CDC_OK);
    CHECK(cdc_tensor_num_basis(t) == 2);
    cdc_matrix* f = nullptr;
    REQUIRE(cdc_matrix_create(2, 1, feat, &f) == CDC_OK);
    cdc_kernel* k = nullptr;
    REQUIRE(cdc_kernel_create(2, 1, 1, theta, &k) == CDC_OK);
    for (cdc_ordering o : {CDC_LEFT_TO_RIGHT, CDC_RIGHT_TO_LEFT}) {
      cdc_matrix* out = nullptr;
      uint64_t madds = 0;
      REQUIRE(cdc_conv_forward(t, f, k, o, &out, &madds) == CDC_OK);
      CHECK(cdc_matrix_data(out)[0] == 4.5);
      CHECK(madds > 0);
      cdc_matrix_destroy(out);
    }
    cdc_matrix* gf = nullptr;
    cdc_kernel* gk = nullptr;
    // grad_out must be S' x P; passing the S x Q features is a shape error.
    CHECK(cdc_conv_backward(t, f, k, f, &gf, &gk) == CDC_ERR_ARGUMENT);
    const double one[] = {1.0};
    cdc_matrix* go = nullptr;
    REQUIRE(cdc_matrix_create(1, 1, one, &go) == CDC_OK);
    REQUIRE(cdc_conv_backward(t, f, k, go, &gf, &gk) == CDC_OK);
    // dF_j = p0 + p1 = 1 + (0.5 - x_j); dTheta = (N F)^T dF'.
    CHECK(cdc_matrix_data(gf)[0] == 1.5);
    CHECK(cdc_matrix_data(gf)[1] == 0.5);
    cdc_matrix_destroy(go);
    cdc_matrix_destroy(gf);
    cdc_kernel_destroy(gk);
    cdc_matrix_destroy(f);
    cdc_kernel_destroy(k);
    cdc_tensor_destroy(t);
    cdc_neighborhood_destroy(nb);
    cdc_cloud_destroy(a);
    cdc_cloud_destroy(b);
  }

  TEST_CASE("errors become status codes") {
    const double bad[] = {NAN};
    cdc_cloud* c = nullptr;
    CHECK(cdc_cloud_create(1, bad, 1, &c) != CDC_OK);
    CHECK(c == nullptr);
    CHECK(std::strlen(cdc_last_error()) > 0);
    CHECK(cdc_cloud_read("/nonexistent/cloud.csv", &c) == CDC_ERR_IO);
    CHECK(cdc_cloud_create(1, bad, 1, nullptr) == CDC_ERR_ARGUMENT);
    CHECK(std::string(cdc_status_name(CDC_ERR_SORTEDNESS)).size() > 0);
  }

  TEST_CASE("sampling") {
    const double pts[] = {0.0, 0.4, 0.9, 2.0};
    cdc_cloud* c = nullptr;
    REQUIRE(cdc_cloud_create(1, pts, 4, &c) == CDC_OK);
    cdc_sample* s = nullptr;
    REQUIRE(cdc_cloud_sample(c, CDC_SAMPLE_APPROX_IFP_REJECTION, 3, 1.0, &s) == CDC_OK);
    REQUIRE(cdc_sample_size(s) == 3);
    CHECK(cdc_sample_indices(s)[0] == 0);
    CHECK(cdc_sample_indices(s)[1] == 3);
    CHECK(cdc_sample_indices(s)[2] == 2);
    CHECK(cdc_sample_num_points(s) == 4);
    cdc_sample_destroy(s);
    CHECK(cdc_cloud_sample(c, CDC_SAMPLE_IFP, 0, 0.0, &s) == CDC_ERR_ARGUMENT);
    cdc_cloud_destroy(c);
  }

  TEST_CASE("ordering helpers") {
    CHECK(cdc_choose_ordering(100, 50, 4, 8, 4, 500) == CDC_LEFT_TO_RIGHT);
    CHECK(cdc_choose_ordering(50, 100, 8, 4, 4, 500) == CDC_RIGHT_TO_LEFT);
    CHECK(std::string(cdc_ordering_name(CDC_LEFT_TO_RIGHT)) == "left-to-right");
    CHECK(cdc_basis_size(3, 2) == 10);
  }

  TEST_CASE("bench shape") {
    cdc_bench_config cfg;
    cdc_bench_default_config(&cfg);
    cfg.reps = 0;
    cdc_bench_report r{};
    REQUIRE(cdc_bench(&cfg, &r) == CDC_OK);
    CHECK(r.num_edges == 294912);
    CHECK(r.runs == 0);
  }

  TEST_CASE("verify reports through the callback") {
    std::vector<double> errors;
    double tol = 0, err = 0;
    int passed = 0;
    auto cb = [](void* user, size_t, double e, int) { static_cast<std::vector<double>*>(user)->push_back(e); };
    REQUIRE(cdc_verify("sampling", 1, 3, 0.0, cb, &errors, &tol, &err, &passed) == CDC_OK);
    CHECK(errors.size() == 3);
    CHECK(passed == 1);
    CHECK(cdc_verify("nope", 1, 3, 0.0, nullptr, nullptr, &tol, &err, &passed) == CDC_ERR_ARGUMENT);
  }
}
