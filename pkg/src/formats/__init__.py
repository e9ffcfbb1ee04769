# Document formats module
