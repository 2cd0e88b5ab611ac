#!/usr/bin/env python3
import sys
import subprocess


def check_dependencies():
    """Check if required dependencies are installed."""
    try:
        import numpy
        import scipy

        print(f"numpy {numpy.__version__}, scipy {scipy.__version__} are available")
        return True
    except ImportError:
        print("numpy or scipy not found!")
        print("   Install dependencies: pip install -r requirements.txt")
        return False


def run_unit_tests():
    """Run fast tests only (no slow sweeps)."""
    print("🧪 Running unit tests...")
    cmd = ["pytest", "tests/", "-m", "not slow", "-v"]
    return subprocess.run(cmd).returncode


def run_slow_tests():
    """Run the slow sweeps and acceptance checks."""
    print("🐢 Running slow tests...")
    cmd = ["pytest", "tests/", "-m", "slow or acceptance", "-v"]
    return subprocess.run(cmd).returncode


def run_all_tests():
    """Run all tests."""
    print("🚀 Running all tests...")
    cmd = ["pytest", "tests/", "-v"]
    return subprocess.run(cmd).returncode


def run_specific_test(test_name):
    """Run a specific test file or test function."""
    print(f"🎯 Running specific test: {test_name}")
    cmd = ["pytest", test_name, "-v", "-s"]
    return subprocess.run(cmd).returncode


def main():
    """Main test runner."""
    if not check_dependencies():
        return 1

    test_type = sys.argv[1].lower() if len(sys.argv) > 1 else "unit"

    if test_type.startswith("tests/") or ".py" in test_type:
        return run_specific_test(test_type)

    if test_type in ["unit", "u"]:
        return run_unit_tests()
    elif test_type in ["slow", "s"]:
        return run_slow_tests()
    elif test_type in ["all", "a"]:
        return run_all_tests()
    else:
        print("Usage: python run_tests.py [unit|slow|all|test_file]")
        print("  unit       - Run fast tests only (default)")
        print("  slow       - Run slow sweeps and acceptance checks")
        print("  all        - Run all tests")
        print("  test_file  - Run specific test file (e.g., tests/test_groups.py)")
        return 1


if __name__ == "__main__":
    sys.exit(main())
