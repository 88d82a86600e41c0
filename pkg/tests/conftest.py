from hypothesis import settings

# fixed example generation so the randomized suites are reproducible
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")
