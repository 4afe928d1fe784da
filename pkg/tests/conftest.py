# Makes the tests directory importable so suites can share the corpus module.
