void victim_function(size_t x){
	if(x < size)
		temp &= array2[array1[x] * 512];
}
