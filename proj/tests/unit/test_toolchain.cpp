#include <doctest.h>

#include <zkopt/toolchain.hpp>

#include "../support/toolchain_fixture.hpp"

using namespace zkopt;
using zktest::TmpDir;

TEST_CASE("expand_profiles: baseline + passes + six levels") {
    SUBCASE("default catalog") {
        auto catalog = default_pass_catalog();
        auto profiles = expand_profiles(catalog);
        CHECK(profiles.size() == catalog.passes.size() + 7);
        CHECK(profiles.front().kind == OptProfile::Kind::Baseline);
    }
    SUBCASE("64-pass catalog expands to 71") {
        PassCatalog c;
        for (int i = 0; i < 64; i++)
            c.passes.push_back({"pass" + std::to_string(i), "pipeline", ""});
        CHECK(expand_profiles(c).size() == 71);
    }
    SUBCASE("single-pass catalog expands to 8") {
        PassCatalog c;
        c.passes.push_back({"only", "only", ""});
        CHECK(expand_profiles(c).size() == 8);
    }
    SUBCASE("empty catalog is rejected") {
        CHECK_THROWS_AS(expand_profiles(PassCatalog{}), ConfigError);
    }
}

TEST_CASE("profile ids are stable and distinct") {
    CHECK(OptProfile::baseline().id() == "baseline");
    CHECK(OptProfile::standard("2").id() == "O2");
    CHECK(OptProfile::sequence({"inline", "licm"}).id() == "seq:inline+licm");
    auto p = OptProfile::standard("3");
    p.thresholds["inline-threshold"] = 4328;
    CHECK(p.id() == "O3,inline-threshold=4328");
}

TEST_CASE("profile validation enforces catalog membership and depth") {
    auto catalog = default_pass_catalog();
    CHECK_NOTHROW(OptProfile::sequence({"licm"}).validate(catalog, 20));
    CHECK_THROWS_AS(OptProfile::sequence({"definitely-not-a-pass"}).validate(catalog, 20),
                    ConfigError);
    std::vector<std::string> deep(21, "licm");
    CHECK_THROWS_AS(OptProfile::sequence(deep).validate(catalog, 20), ConfigError);
    CHECK_THROWS_AS(OptProfile::standard("9").validate(catalog, 20), ConfigError);
}

TEST_CASE("catalog rejects duplicate names") {
    PassCatalog c;
    c.passes.push_back({"licm", "x", ""});
    c.passes.push_back({"licm", "y", ""});
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("baseline plan runs no middle-end stage") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    BuildRequest req{zktest::corpus_dir() / "loop_sum.c", OptProfile::baseline(), {}};
    auto stages = tc.plan(req);
    REQUIRE(stages.size() == 3);   // frontend, backend, link
    for (const auto& [stage, argv] : stages) {
        CHECK(stage != "middle");
        for (const auto& arg : argv)
            CHECK(arg.find("--passes") == std::string::npos);
    }
}

TEST_CASE("pass sequence plan carries the pipeline in order") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    BuildRequest req{zktest::corpus_dir() / "loop_sum.c",
                     OptProfile::sequence({"mem2reg", "licm"}), {}};
    auto stages = tc.plan(req);
    REQUIRE(stages.size() == 4);
    bool found = false;
    for (const auto& [stage, argv] : stages)
        if (stage == "middle")
            for (const auto& arg : argv)
                if (arg == "--passes=function(mem2reg),function(loop-mssa(licm))")
                    found = true;
    CHECK(found);
}

TEST_CASE("threshold flags reach the command line") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    auto profile = OptProfile::standard("3");
    profile.thresholds["inline-threshold"] = 4328;
    BuildRequest req{zktest::corpus_dir() / "loop_sum.c", profile, {}};
    auto stages = tc.plan(req);
    bool found = false;
    for (const auto& [stage, argv] : stages)
        for (const auto& arg : argv)
            if (arg == "-inline-threshold=4328")
                found = true;
    CHECK(found);
}

TEST_CASE("baseline compile produces a runnable image") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    BuildRequest req{zktest::corpus_dir() / "loop_sum.c", OptProfile::baseline(),
                     {{"N", "100"}}};
    auto artifact = tc.compile(req);
    CHECK(fs::exists(artifact.elf_path));
    CHECK(artifact.elf_hash.size() == 64);

    auto trace = zktest::run_elf_path(artifact.elf_path, 1'000'000);
    REQUIRE(trace.halt.kind == HaltKind::Exited);
    CHECK(trace.halt.exit_code == 0);

    unsigned int sum = 0;
    for (unsigned int i = 0; i < 100; i++)
        sum += i * 3u + 1u;
    char want[16];
    std::snprintf(want, sizeof want, "%08x\n", sum);
    CHECK(zktest::output_text(trace) == want);
}

TEST_CASE("empty pass sequence builds the same binary as baseline") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    BuildRequest base{zktest::corpus_dir() / "loop_sum.c", OptProfile::baseline(),
                      {{"N", "64"}}};
    BuildRequest empty{zktest::corpus_dir() / "loop_sum.c", OptProfile::sequence({}),
                       {{"N", "64"}}};
    CHECK(tc.compile(base).elf_hash == tc.compile(empty).elf_hash);
}

TEST_CASE("independent rebuilds produce identical content hashes") {
    TmpDir tmp;
    Toolchain tc1(zktest::test_toolchain_config(), tmp.path / "a");
    Toolchain tc2(zktest::test_toolchain_config(), tmp.path / "b");
    BuildRequest req{zktest::corpus_dir() / "fibonacci.c",
                     OptProfile::sequence({"mem2reg", "dce"}), {{"N", "30"}}};
    auto a = tc1.compile(req);
    auto b = tc2.compile(req);
    CHECK(!a.from_cache);
    CHECK(!b.from_cache);
    CHECK(a.elf_hash == b.elf_hash);
}

TEST_CASE("pass catalog round-trips through its config format") {
    auto catalog = default_pass_catalog();
    auto back = pass_catalog_from_json(pass_catalog_to_json(catalog));
    REQUIRE(back.passes.size() == catalog.passes.size());
    for (size_t i = 0; i < catalog.passes.size(); i++) {
        CHECK(back.passes[i].name == catalog.passes[i].name);
        CHECK(back.passes[i].pipeline == catalog.passes[i].pipeline);
    }
    CHECK_THROWS_AS(pass_catalog_from_json(nlohmann::json{{"nope", 1}}), ConfigError);
}

TEST_CASE("same request twice: identical hash, second from cache") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    BuildRequest req{zktest::corpus_dir() / "spill.c", OptProfile::baseline(),
                     {{"N", "10"}}};
    auto first = tc.compile(req);
    auto second = tc.compile(req);
    CHECK(first.elf_hash == second.elf_hash);
    CHECK(!first.from_cache);
    CHECK(second.from_cache);
}

TEST_CASE("mem2reg strictly reduces retired instructions on the spill kernel") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    const auto src = zktest::corpus_dir() / "spill.c";
    auto base = tc.compile({src, OptProfile::baseline(), {{"N", "50"}}});
    auto opt = tc.compile({src, OptProfile::sequence({"mem2reg"}), {{"N", "50"}}});

    auto tb = zktest::run_elf_path(base.elf_path, 4'000'000);
    auto to = zktest::run_elf_path(opt.elf_path, 4'000'000);
    REQUIRE(tb.halt.kind == HaltKind::Exited);
    REQUIRE(to.halt.kind == HaltKind::Exited);
    CHECK(tb.output == to.output);
    CHECK(to.retired < tb.retired);
}

TEST_CASE("standard level O2 compiles and agrees with baseline output") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    const auto src = zktest::corpus_dir() / "fibonacci.c";
    auto base = tc.compile({src, OptProfile::baseline(), {{"N", "90"}}});
    auto o2 = tc.compile({src, OptProfile::standard("2"), {{"N", "90"}}});
    auto tb = zktest::run_elf_path(base.elf_path, 4'000'000);
    auto t2 = zktest::run_elf_path(o2.elf_path, 4'000'000);
    REQUIRE(tb.halt.kind == HaltKind::Exited);
    REQUIRE(t2.halt.kind == HaltKind::Exited);
    CHECK(tb.output == t2.output);
    CHECK(tb.halt.exit_code == t2.halt.exit_code);
}

TEST_CASE("optimizer rejection surfaces as UnknownPass with its stderr") {
    TmpDir tmp;
    PassCatalog catalog = default_pass_catalog();
    catalog.passes.push_back({"bogus", "not-a-real-pass-name", ""});
    Toolchain tc(zktest::test_toolchain_config(), tmp.path, catalog);
    BuildRequest req{zktest::corpus_dir() / "loop_sum.c", OptProfile::sequence({"bogus"}),
                     {{"N", "8"}}};
    try {
        tc.compile(req);
        FAIL("expected UnknownPass");
    } catch (const ToolError& e) {
        CHECK(e.kind() == ToolError::Kind::UnknownPass);
        CHECK(std::string(e.what()).find("not-a-real-pass-name") != std::string::npos);
    }
}

TEST_CASE("broken source surfaces as CompileFailed with the log attached") {
    TmpDir tmp;
    write_file(tmp.path / "broken.c", std::string("int main(void) { return undeclared; }\n"));
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    try {
        tc.compile({tmp.path / "broken.c", OptProfile::baseline(), {}});
        FAIL("expected CompileFailed");
    } catch (const ToolError& e) {
        CHECK(e.kind() == ToolError::Kind::CompileFailed);
        CHECK(std::string(e.what()).find("undeclared") != std::string::npos);
    }
}

TEST_CASE("missing tool surfaces as ToolNotFound") {
    TmpDir tmp;
    auto cfg = zktest::test_toolchain_config();
    cfg.frontend_ir[0] = "no-such-compiler-xyz";
    Toolchain tc(cfg, tmp.path);
    try {
        tc.compile({zktest::corpus_dir() / "loop_sum.c", OptProfile::sequence({"dce"}), {}});
        FAIL("expected ToolNotFound");
    } catch (const ToolError& e) {
        CHECK(e.kind() == ToolError::Kind::ToolNotFound);
    }
}

TEST_CASE("linked binaries expose their symbol table subset") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    auto artifact = tc.compile({zktest::corpus_dir() / "loop_sum.c",
                                OptProfile::baseline(), {{"N", "8"}}});
    auto image = load_elf_file(artifact.elf_path);
    CHECK(image.symbols.count("main") == 1);
    CHECK(image.symbols.count("_start") == 1);
    CHECK(image.symbols.count("_zkrt_stack_top") == 1);
    CHECK(image.symbols.at("main") >= image.address_range().first);
}

TEST_CASE("lto flag reaches the frontend and still links a working image") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    auto profile = OptProfile::standard("2");
    profile.lto = true;
    BuildRequest req{zktest::corpus_dir() / "loop_sum.c", profile, {{"N", "32"}}};

    bool has_flto = false;
    for (const auto& [stage, argv] : tc.plan(req))
        for (const auto& arg : argv)
            if (arg == "-flto")
                has_flto = true;
    CHECK(has_flto);

    auto artifact = tc.compile(req);
    auto trace = zktest::run_elf_path(artifact.elf_path, 100000);
    CHECK(trace.halt.kind == HaltKind::Exited);
    CHECK(trace.halt.exit_code == 0);
}

TEST_CASE("whole corpus builds and runs clean at baseline") {
    TmpDir tmp;
    Toolchain tc(zktest::test_toolchain_config(), tmp.path);
    auto manifest = nlohmann::json::parse(read_text_file(zktest::corpus_dir() / "manifest.json"));
    for (const auto& prog : manifest.at("programs")) {
        const std::string id = prog.at("id");
        CAPTURE(id);
        BuildRequest req;
        req.source = zktest::corpus_dir() / prog.at("source").get<std::string>();
        req.profile = OptProfile::baseline();
        for (auto& [k, v] : prog.at("defines").items())
            req.defines[k] = v.get<std::string>();
        auto artifact = tc.compile(req);
        auto trace = zktest::run_elf_path(artifact.elf_path, prog.at("limit").get<u64>());
        REQUIRE(trace.halt.kind == HaltKind::Exited);
        CHECK(trace.halt.exit_code == 0);
        CHECK(!trace.output.empty());
    }
}
