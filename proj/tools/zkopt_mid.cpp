// zkopt-mid: run a textual pass pipeline over an LLVM IR/bitcode module and
// write the result as bitcode.
//
//   zkopt-mid <in.bc|in.ll> -o <out.bc> --passes=<pipeline> [--mllvm <opt>]...
//
// Exit codes: 0 ok, 1 I/O or pipeline failure, 2 usage, 3 unknown pass.
//
// LLVM is reached through its stable C ABI. The declarations below mirror
// llvm-c (Core.h, IRReader.h, BitWriter.h, Error.h, Transforms/PassBuilder.h)
// so the tool builds against libLLVM.so alone, without the dev headers.

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

extern "C" {
typedef struct LLVMOpaqueContext* LLVMContextRef;
typedef struct LLVMOpaqueModule* LLVMModuleRef;
typedef struct LLVMOpaqueMemoryBuffer* LLVMMemoryBufferRef;
typedef struct LLVMOpaqueError* LLVMErrorRef;
typedef struct LLVMOpaquePassBuilderOptions* LLVMPassBuilderOptionsRef;
typedef struct LLVMOpaqueTargetMachine* LLVMTargetMachineRef;
typedef int LLVMBool;

LLVMContextRef LLVMContextCreate(void);
void LLVMContextDispose(LLVMContextRef);
LLVMBool LLVMCreateMemoryBufferWithContentsOfFile(const char* path,
                                                  LLVMMemoryBufferRef* out,
                                                  char** out_message);
LLVMBool LLVMParseIRInContext(LLVMContextRef, LLVMMemoryBufferRef,
                              LLVMModuleRef* out, char** out_message);
LLVMErrorRef LLVMRunPasses(LLVMModuleRef, const char* passes,
                           LLVMTargetMachineRef, LLVMPassBuilderOptionsRef);
LLVMPassBuilderOptionsRef LLVMCreatePassBuilderOptions(void);
void LLVMDisposePassBuilderOptions(LLVMPassBuilderOptionsRef);
char* LLVMGetErrorMessage(LLVMErrorRef);
void LLVMDisposeErrorMessage(char*);
int LLVMWriteBitcodeToFile(LLVMModuleRef, const char* path);
void LLVMParseCommandLineOptions(int argc, const char* const* argv,
                                 const char* overview);
void LLVMDisposeModule(LLVMModuleRef);
void LLVMDisposeMessage(char*);
}

namespace {

int usage(const char* prog) {
    std::fprintf(stderr,
                 "usage: %s <input.bc|input.ll> -o <output.bc> --passes=<pipeline> "
                 "[--mllvm <option>]...\n",
                 prog);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    std::string input, output, passes;
    bool have_passes = false;
    std::vector<std::string> mllvm_args;

    for (int i = 1; i < argc; i++) {
        const std::string arg = argv[i];
        if (arg == "-o") {
            if (++i >= argc)
                return usage(argv[0]);
            output = argv[i];
        } else if (arg.rfind("--passes=", 0) == 0) {
            passes = arg.substr(9);
            have_passes = true;
        } else if (arg == "--mllvm") {
            if (++i >= argc)
                return usage(argv[0]);
            mllvm_args.push_back(argv[i]);
        } else if (arg == "--help" || arg == "-h") {
            usage(argv[0]);
            return 0;
        } else if (!arg.empty() && arg[0] == '-') {
            std::fprintf(stderr, "unknown option: %s\n", arg.c_str());
            return 2;
        } else if (input.empty()) {
            input = arg;
        } else {
            return usage(argv[0]);
        }
    }
    if (input.empty() || output.empty() || !have_passes)
        return usage(argv[0]);

    if (!mllvm_args.empty()) {
        std::vector<const char*> args;
        args.push_back(argv[0]);
        for (const auto& a : mllvm_args)
            args.push_back(a.c_str());
        LLVMParseCommandLineOptions(static_cast<int>(args.size()), args.data(),
                                    "zkopt-mid");
    }

    LLVMContextRef ctx = LLVMContextCreate();
    LLVMMemoryBufferRef buf = nullptr;
    char* msg = nullptr;
    if (LLVMCreateMemoryBufferWithContentsOfFile(input.c_str(), &buf, &msg)) {
        std::fprintf(stderr, "cannot read %s: %s\n", input.c_str(), msg ? msg : "?");
        LLVMDisposeMessage(msg);
        return 1;
    }
    LLVMModuleRef mod = nullptr;
    if (LLVMParseIRInContext(ctx, buf, &mod, &msg)) {
        std::fprintf(stderr, "cannot parse %s: %s\n", input.c_str(), msg ? msg : "?");
        LLVMDisposeMessage(msg);
        return 1;
    }

    LLVMPassBuilderOptionsRef opts = LLVMCreatePassBuilderOptions();
    // An empty pipeline is a no-op copy.
    if (!passes.empty()) {
        LLVMErrorRef err = LLVMRunPasses(mod, passes.c_str(), nullptr, opts);
        if (err) {
            char* emsg = LLVMGetErrorMessage(err);
            const bool unknown = emsg && std::strstr(emsg, "unknown") != nullptr;
            std::fprintf(stderr, "pass pipeline '%s' failed: %s\n", passes.c_str(),
                         emsg ? emsg : "?");
            LLVMDisposeErrorMessage(emsg);
            LLVMDisposePassBuilderOptions(opts);
            return unknown ? 3 : 1;
        }
    }
    LLVMDisposePassBuilderOptions(opts);

    if (LLVMWriteBitcodeToFile(mod, output.c_str()) != 0) {
        std::fprintf(stderr, "cannot write %s\n", output.c_str());
        return 1;
    }
    LLVMDisposeModule(mod);
    LLVMContextDispose(ctx);
    return 0;
}
