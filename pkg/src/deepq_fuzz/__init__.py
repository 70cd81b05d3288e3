"""deepq-fuzzer - reinforcement fuzzing with deep Q-learning over input substrings."""
